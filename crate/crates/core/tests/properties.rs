mod common;

use common::props::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn vsd_error_never_grows_with_tau(c in vsd_case()) {
        vsd_tau_monotone(&c)?;
    }

    #[test]
    fn recall_never_drops_with_theta(c in match_case()) {
        recall_theta_monotone(&c)?;
    }

    #[test]
    fn matching_depends_only_on_score_order(c in match_case(), a in 0.01f64..5.0, b in -3.0f64..3.0) {
        matching_rescale_invariant(&c, a, b)?;
    }

    #[test]
    fn more_symmetries_never_increase_error(keep in prop::collection::vec(1usize..24, 0..24), e in pose(), g in pose()) {
        symmetry_growth_monotone(cube_symmetries(), &keep, &e, &g)?;
    }

    #[test]
    fn mssd_is_invariant_to_a_common_rigid_motion(e in pose(), g in pose(), m in pose()) {
        mssd_rigid_invariant(cube_symmetries(), &e, &g, &m)?;
    }

    #[test]
    fn adi_is_at_most_add(v in points(1..60), e in pose(), g in pose()) {
        adi_le_add(&v, &e, &g)?;
    }
}
