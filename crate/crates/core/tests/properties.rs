//! Property tests over random domains and configurations.

use std::sync::Arc;

use proptest::prelude::*;

use fkf_core::config::FkConfig;
use fkf_core::lattice::build_domain;
use fkf_core::observables::matching_sign;
use fkf_core::winding::{path_winding, winding_phase};

fn arb_domain_and_bits() -> impl Strategy<Value = (usize, usize, u64)> {
    (2usize..=4, 2usize..=4).prop_flat_map(|(w, h)| {
        let edges = w * (h - 1) + h * (w - 1);
        (Just(w), Just(h), 0..(1u64 << edges))
    })
}

proptest! {
    /// Euler relation and loop regularity on random configurations.
    #[test]
    fn euler_and_regularity((w, h, bits) in arb_domain_and_bits()) {
        let d = Arc::new(build_domain(w, h).unwrap());
        let cfg = FkConfig::new(Arc::clone(&d), bits).unwrap();
        let labels = cfg.clusters();
        let loops = cfg.extract_loops();
        prop_assert_eq!(loops.len(), labels.primal_count + labels.dual_count - 1);
        let mut seen = vec![0u8; d.corner_count()];
        for (li, l) in loops.loops().iter().enumerate() {
            prop_assert_eq!(loops.loop_turn(li).abs(), 4);
            for &c in l {
                seen[c] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&n| n == 1));
    }

    /// Winding phase well-definedness, antisymmetry and composition for
    /// random co-looped corner pairs and triples.
    #[test]
    fn winding_phase_identities((w, h, bits) in arb_domain_and_bits()) {
        let d = Arc::new(build_domain(w, h).unwrap());
        let cfg = FkConfig::new(Arc::clone(&d), bits).unwrap();
        let loops = cfg.extract_loops();
        for l in loops.loops() {
            if l.len() < 3 {
                continue;
            }
            let (c1, c2, c3) = (l[0], l[l.len() / 3], l[2 * l.len() / 3]);
            if c1 == c2 || c2 == c3 || c1 == c3 {
                continue;
            }
            // well-definedness is asserted inside winding_phase
            let p12 = winding_phase(&loops, c1, c2).unwrap();
            let p21 = winding_phase(&loops, c2, c1).unwrap();
            prop_assert_eq!(i32::from(p12) * i32::from(p21), -1);
            let p23 = winding_phase(&loops, c2, c3).unwrap();
            let p13 = winding_phase(&loops, c1, c3).unwrap();
            prop_assert_eq!(i32::from(p12) * i32::from(p23), i32::from(p13));
            // arcs concatenate exactly
            let q12 = path_winding(&loops, c1, c2).unwrap().0;
            let q23 = path_winding(&loops, c2, c3).unwrap().0;
            let q13 = path_winding(&loops, c1, c3).unwrap().0;
            prop_assert_eq!(q12 + q23, q13);
        }
    }

    /// The matching sign is the crossing parity of the chord diagram.
    #[test]
    fn matching_sign_is_crossing_parity(perm in Just(()).prop_flat_map(|_| {
        proptest::sample::subsequence((0..8usize).collect::<Vec<_>>(), 8)
            .prop_shuffle()
    })) {
        let pairs: Vec<(usize, usize)> = perm
            .chunks(2)
            .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
            .collect();
        let mut crossings = 0;
        for i in 0..pairs.len() {
            for j in i + 1..pairs.len() {
                let (a, b) = pairs[i];
                let (c, e) = pairs[j];
                let inside = |x: usize| a < x && x < b;
                if inside(c) != inside(e) {
                    crossings += 1;
                }
            }
        }
        let expect = if crossings % 2 == 0 { 1 } else { -1 };
        prop_assert_eq!(matching_sign(&pairs), expect);
    }

    /// Hex round-trip of configuration masks.
    #[test]
    fn config_hex_round_trip((w, h, bits) in arb_domain_and_bits()) {
        let d = Arc::new(build_domain(w, h).unwrap());
        let cfg = FkConfig::new(Arc::clone(&d), bits).unwrap();
        let back = FkConfig::from_hex(Arc::clone(&d), &cfg.to_hex()).unwrap();
        prop_assert_eq!(back.bits(), bits);
    }
}
