//! Randomized property checks for the pure domain operations.

use groupcast_core::bounds::{mu_p1, mu_p2};
use groupcast_core::instance::{
    outer_product, validate_instance, Channel, Field, InstanceP2, InstanceRef,
};
use groupcast_core::linalg::Cplx;
use groupcast_core::rounding::{round_binary_p1, scale_factor, select_top_slots};
use proptest::prelude::*;

fn channel_strategy(n: usize) -> impl Strategy<Value = Channel> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), n).prop_filter_map(
        "nonzero channel",
        |pairs| {
            let entries: Vec<Cplx> = pairs.iter().map(|&(re, im)| Cplx::new(re, im)).collect();
            let c = Channel::new(entries);
            (c.norm_sqr() > 1e-6).then_some(c)
        },
    )
}

proptest! {
    #[test]
    fn outer_product_trace_is_norm_sqr(h in channel_strategy(4)) {
        let hm = outer_product(&h).unwrap();
        let expect = h.norm_sqr();
        prop_assert!((hm.trace() - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn outer_product_ignores_global_phase(h in channel_strategy(3), theta in 0.0f64..6.283) {
        let phase = Cplx::new(theta.cos(), theta.sin());
        let rotated = Channel::new(h.entries().iter().map(|&v| v * phase).collect());
        let a = outer_product(&h).unwrap().materialize();
        let b = outer_product(&rotated).unwrap().materialize();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((a.get(i, j) - b.get(i, j)).norm() <= 1e-12 * (1.0 + a.frob()));
            }
        }
    }

    #[test]
    fn quad_form_matches_materialized_matrix(h in channel_strategy(4), x in channel_strategy(4)) {
        let hm = outer_product(&h).unwrap();
        let dense = hm.materialize().quad_form_re(x.entries());
        let fast = hm.quad_form(x.entries());
        prop_assert!((dense - fast).abs() <= 1e-10 * (1.0 + dense.abs()));
    }

    #[test]
    fn binary_threshold_matches_definition(alpha in prop::collection::vec(0.0f64..=1.0, 1..8)) {
        let (beta, set) = round_binary_p1(&alpha);
        for (i, (&a, &b)) in alpha.iter().zip(&beta).enumerate() {
            prop_assert_eq!(b == 1, a >= 0.5);
            prop_assert_eq!(set.contains(&i), b == 1);
        }
    }

    #[test]
    fn top_slot_selection_is_sound(
        row in prop::collection::vec(0.0f64..=1.0, 1..7),
        quota_seed in 0usize..100,
    ) {
        let q = row.len();
        let quota = 1 + quota_seed % q;
        let picked = select_top_slots(&row, quota);
        prop_assert_eq!(picked.len(), quota);
        prop_assert!(picked.windows(2).all(|w| w[0] < w[1]));
        // Every picked weight is at least the quota-th largest.
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let cutoff = sorted[quota - 1];
        for &s in &picked {
            prop_assert!(row[s] >= cutoff);
        }
        // Ties break toward lower indices: anything strictly above the
        // cutoff must be picked, and among cutoff-valued slots the picked
        // ones precede the skipped ones.
        for (s, &v) in row.iter().enumerate() {
            if v > cutoff {
                prop_assert!(picked.contains(&s));
            }
        }
        let skipped_tie = (0..q).find(|s| !picked.contains(s) && row[*s] == cutoff);
        if let Some(first_skipped) = skipped_tie {
            for &s in &picked {
                if row[s] == cutoff {
                    prop_assert!(s < first_skipped);
                }
            }
        }
    }

    #[test]
    fn scale_factor_covers_every_listed_user(
        hs in prop::collection::vec(channel_strategy(3), 1..4),
        xi in channel_strategy(3),
    ) {
        let mats: Vec<_> = hs.iter().map(|h| outer_product(h).unwrap()).collect();
        let refs: Vec<_> = mats.iter().collect();
        if let Some(t) = scale_factor(xi.entries(), &refs) {
            let w: Vec<Cplx> = xi.entries().iter().map(|&v| v * t).collect();
            let mut tight = 0;
            for h in &mats {
                let q = h.quad_form(&w);
                prop_assert!(q >= 1.0 - 1e-9);
                tight += usize::from(q <= 1.0 + 1e-9);
            }
            // The scale is minimal: some constraint sits at the target.
            prop_assert!(tight >= 1);
        }
    }

    #[test]
    fn validation_is_pure_and_idempotent(
        hs in prop::collection::vec(channel_strategy(3), 1..4),
        q in 1usize..4,
    ) {
        let priorities = vec![1; hs.len()];
        let inst = InstanceP2 { field: Field::Complex, channels: hs, q, priorities };
        let first = validate_instance(InstanceRef::P2(&inst));
        let second = validate_instance(InstanceRef::P2(&inst));
        prop_assert_eq!(first.len(), second.len());
        for (a, b) in first.iter().zip(&second) {
            prop_assert_eq!(a.code, b.code);
            prop_assert_eq!(a.index, b.index);
        }
    }

    #[test]
    fn constants_grow_with_users(m in 2usize..12, field_bit in 0u8..2) {
        let field = if field_bit == 0 { Field::Real } else { Field::Complex };
        let small = mu_p1(m, field);
        let large = mu_p1(m + 1, field);
        prop_assert!(small.mu > 0.0);
        prop_assert!(large.mu > small.mu);
        prop_assert!((small.mu - 3.0 * small.alpha_thresh).abs() <= 1e-12 * small.mu);
        // Unit quotas over two slots reproduce the two-slot constant.
        let p2 = mu_p2(&vec![1; m], 2, field);
        prop_assert!((p2.mu - small.mu).abs() <= 1e-12 * small.mu);
    }
}
