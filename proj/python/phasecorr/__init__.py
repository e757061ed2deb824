"""Phase-correlation characterization for gain-switched laser pulse trains."""

from phasecorr._core import (  # noqa: F401
    __version__,
    circular_moment,
    combine_h,
    conditional_pdf,
    generate_sequence,
    q_first_order,
    q_general,
    q_second_order,
    run_network,
    simulate_pulses,
    threshold_current,
    v_statistic,
    wg_pdf,
    wg_sample,
    wrap_angle,
)
