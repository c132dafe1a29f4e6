use std::ffi::{CStr, CString};
use std::ptr;

use disagg_ffi::*;

fn last_error() -> String {
    let p = disagg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn square_wave() -> *mut DisaggSeries {
    let v: Vec<f64> = (0..600).map(|i| if i % 40 >= 10 && i % 40 < 30 { 3200.0 } else { 120.0 }).collect();
    let tz = CString::new("UTC").unwrap();
    let mut s = ptr::null_mut();
    let st = unsafe { disagg_series_new(0, tz.as_ptr(), 60, v.as_ptr(), v.len(), &mut s) };
    assert_eq!(st, DisaggStatus::Ok);
    s
}

#[test]
fn series_round_trip() {
    let s = square_wave();
    unsafe {
        assert_eq!(disagg_series_len(s), 600);
        let mut buf = vec![0.0; 10];
        let mut len = 0;
        assert_eq!(disagg_series_copy_values(s, buf.as_mut_ptr(), buf.len(), &mut len), DisaggStatus::Ok);
        assert_eq!(len, 600);
        assert_eq!(buf[0], 120.0);
        assert_eq!(buf[9], 120.0);
        disagg_series_free(s);
    }
}

#[test]
fn events_pairs_and_hart() {
    let s = square_wave();
    unsafe {
        let mut ev = ptr::null_mut();
        assert_eq!(disagg_detect_events(s, 15.0, 70.0, &mut ev), DisaggStatus::Ok);
        assert_eq!(disagg_events_len(ev), 30);
        let (mut t, mut d) = (0i64, 0.0);
        assert_eq!(disagg_events_get(ev, 0, &mut t, &mut d), DisaggStatus::Ok);
        assert_eq!((t, d), (600, 3080.0));
        assert_eq!(disagg_events_get(ev, 1000, &mut t, &mut d), DisaggStatus::OutOfRange);

        let mut pairs = ptr::null_mut();
        assert_eq!(disagg_pair_events(ev, 0.2, 7200, &mut pairs), DisaggStatus::Ok);
        assert_eq!(disagg_pairs_len(pairs), 15);
        let (mut on, mut off, mut mag) = (0i64, 0i64, 0.0);
        assert_eq!(disagg_pairs_get(pairs, 0, &mut on, &mut off, &mut mag), DisaggStatus::Ok);
        assert_eq!((on, off, mag), (600, 1800, 3080.0));
        assert_eq!(disagg_pair_events(ev, 0.0, 7200, &mut pairs), DisaggStatus::Argument);

        let mut hart = ptr::null_mut();
        assert_eq!(disagg_hart(s, &mut hart), DisaggStatus::Ok);
        assert_eq!(disagg_hart_hvac_missing(hart), 0);
        let mut hvac = ptr::null_mut();
        assert_eq!(disagg_hart_hvac(hart, &mut hvac), DisaggStatus::Ok);
        assert_eq!(disagg_series_len(hvac), 600);

        disagg_series_free(hvac);
        disagg_hart_free(hart);
        disagg_pairs_free(pairs);
        disagg_events_free(ev);
        disagg_series_free(s);
    }
}

#[test]
fn errors_set_codes_and_messages() {
    let tz = CString::new("Mars/Olympus").unwrap();
    let mut s = ptr::null_mut();
    let st = unsafe { disagg_series_new(0, tz.as_ptr(), 60, ptr::null(), 0, &mut s) };
    assert_eq!(st, DisaggStatus::Timezone);
    assert!(s.is_null());
    assert!(last_error().contains("Mars/Olympus"));

    let st = unsafe { disagg_series_new(0, ptr::null(), 60, ptr::null(), 0, &mut s) };
    assert_eq!(st, DisaggStatus::NullPointer);

    let mut ev = ptr::null_mut();
    assert_eq!(unsafe { disagg_detect_events(ptr::null(), 15.0, 70.0, &mut ev) }, DisaggStatus::NullPointer);

    // A successful call clears the message.
    let ok = square_wave();
    assert!(disagg_last_error_message().is_null());
    unsafe { disagg_series_free(ok) };
    unsafe {
        disagg_series_free(ptr::null_mut());
        disagg_string_free(ptr::null_mut());
    }
}

#[test]
fn occupancy_evaluation() {
    let flags_p: Vec<u8> = (0..96).map(|i| (i % 2) as u8).collect();
    let flags_t: Vec<u8> = vec![1; 96];
    unsafe {
        let (mut p, mut t) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(disagg_occupancy_new(0, 900, flags_p.as_ptr(), 96, &mut p), DisaggStatus::Ok);
        assert_eq!(disagg_occupancy_new(0, 900, flags_t.as_ptr(), 96, &mut t), DisaggStatus::Ok);
        let mut f = 0u8;
        assert_eq!(disagg_occupancy_get(p, 1, &mut f), DisaggStatus::Ok);
        assert_eq!(f, 1);
        let tz = CString::new("UTC").unwrap();
        let mut m = DisaggOccupancyMetrics::default();
        assert_eq!(disagg_occupancy_evaluate(p, t, tz.as_ptr(), &mut m), DisaggStatus::Ok);
        // 06:00-22:00 is 64 windows.
        assert_eq!(m.tp + m.tn + m.fp + m.fn_, 64);
        assert_eq!((m.tp, m.fn_), (32, 32));
        assert_eq!(m.accuracy_pct, 50.0);
        disagg_occupancy_free(p);
        disagg_occupancy_free(t);
    }
}

#[test]
fn experiment_json_over_synthetic_corpus() {
    let dir = tempfile::tempdir().unwrap();
    disagg_core::synth::gen_corpus(3, 7, 7, dir.path()).unwrap();
    let manifest = CString::new(dir.path().join("manifest.json").to_str().unwrap()).unwrap();
    let algos = CString::new("ours,chen").unwrap();
    let protocol = CString::new("split-half").unwrap();
    let config = CString::new(r#"{"seed": 3}"#).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe {
        disagg_occupancy_experiment_json(manifest.as_ptr(), algos.as_ptr(), protocol.as_ptr(), config.as_ptr(), &mut out)
    };
    assert_eq!(st, DisaggStatus::Ok, "{}", last_error());
    let doc: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
    unsafe { disagg_string_free(out) };
    assert_eq!(doc["seed"], 3);
    assert_eq!(doc["results"]["rows"].as_array().unwrap().len(), 6);

    let bad = CString::new("ours,psychic").unwrap();
    let st = unsafe {
        disagg_occupancy_experiment_json(manifest.as_ptr(), bad.as_ptr(), protocol.as_ptr(), ptr::null(), &mut out)
    };
    assert_eq!(st, DisaggStatus::Config);
    assert!(last_error().contains("psychic"));
}
