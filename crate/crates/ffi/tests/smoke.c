#include <stdio.h>
#include "disagg_ffi.h"

int main(void) {
    double v[120];
    for (int i = 0; i < 120; i++) {
        v[i] = ((i >= 20 && i < 50) || (i >= 70 && i < 100)) ? 2500.0 : 100.0;
    }
    DisaggSeries *s = NULL;
    if (disagg_series_new(0, "UTC", 60, v, 120, &s) != DISAGG_STATUS_OK) {
        fprintf(stderr, "%s\n", disagg_last_error_message());
        return 1;
    }
    DisaggEvents *ev = NULL;
    DisaggPairs *pairs = NULL;
    DisaggHart *hart = NULL;
    if (disagg_detect_events(s, 15.0, 70.0, &ev) != DISAGG_STATUS_OK ||
        disagg_pair_events(ev, 0.2, 7200, &pairs) != DISAGG_STATUS_OK ||
        disagg_hart(s, &hart) != DISAGG_STATUS_OK) {
        fprintf(stderr, "%s\n", disagg_last_error_message());
        return 1;
    }
    DisaggSeries *bad = NULL;
    DisaggStatus st = disagg_series_new(0, "Nowhere/Else", 60, v, 120, &bad);
    printf("events=%zu pairs=%zu hvac_missing=%d bad_tz=%d\n", disagg_events_len(ev), disagg_pairs_len(pairs),
           disagg_hart_hvac_missing(hart), (int)st);
    disagg_hart_free(hart);
    disagg_pairs_free(pairs);
    disagg_events_free(ev);
    disagg_series_free(s);
    return 0;
}
