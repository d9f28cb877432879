use proptest::prelude::*;
use rcm_core::geometry::{index_of, z_of, window_for_radius, CubeGrid};
use rcm_core::{build, event_b_r, origin_reach, sample, ConnectionFamily, Kernel, MarkLaw};

const D: f64 = 0.8;

fn family(which: u8) -> ConnectionFamily {
    match which % 3 {
        0 => ConnectionFamily::vietoris_rips(0.3, 3).with_cutoff(D),
        1 => ConnectionFamily::cech(0.35, 3).with_cutoff(D),
        _ => ConnectionFamily::diam_kernel(
            vec![
                Kernel::Step { value: 0.8, width: 0.75 },
                Kernel::Exponential { amplitude: 0.9, scale: 0.6 },
                Kernel::Constant { value: 0.6 },
            ],
            D,
        ),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn complexes_are_downward_closed(seed in any::<u64>(), beta in 0.0f64..8.0, which in 0u8..3) {
        let w = window_for_radius(2.0, CubeGrid::new(2, D).unwrap(), D).unwrap();
        let c = build(&sample(seed, beta, &w, &MarkLaw::Unit, true).unwrap(), &family(which)).unwrap();
        prop_assert!(c.is_downward_closed());
        prop_assert!(c.simplices(1).iter().all(|e| c.diameter(e) <= D));
    }

    #[test]
    fn events_shrink_with_radius_and_dimension(seed in any::<u64>(), beta in 2.0f64..8.0, which in 0u8..3) {
        let w = window_for_radius(3.0, CubeGrid::new(2, D).unwrap(), D).unwrap();
        let c = build(&sample(seed, beta, &w, &MarkLaw::Unit, true).unwrap(), &family(which)).unwrap();
        for q in 0..3 {
            let hits: Vec<bool> = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
                .iter()
                .map(|&r| event_b_r(&c, q, r).unwrap().occurred)
                .collect();
            prop_assert!(hits.windows(2).all(|p| p[0] >= p[1]), "q {}: {:?}", q, hits);
            if q > 0 {
                for r in [1.0, 2.0, 3.0] {
                    if event_b_r(&c, q, r).unwrap().occurred {
                        prop_assert!(event_b_r(&c, q - 1, r).unwrap().occurred);
                    }
                }
                let (hi, lo) = (origin_reach(&c, q).unwrap(), origin_reach(&c, q - 1).unwrap());
                prop_assert!(hi.unwrap_or(0.0) <= lo.unwrap_or(0.0));
            }
        }
    }

    #[test]
    fn sampling_is_a_function_of_the_seed(seed in any::<u64>(), beta in 0.0f64..6.0) {
        let w = window_for_radius(2.0, CubeGrid::new(2, D).unwrap(), D).unwrap();
        let law = MarkLaw::UniformRadius { min: 0.1, max: 0.3 };
        prop_assert_eq!(sample(seed, beta, &w, &law, true).unwrap(), sample(seed, beta, &w, &law, true).unwrap());
    }

    #[test]
    fn resampling_touches_one_cube(seed in any::<u64>(), salt in 1u64.., pick in any::<prop::sample::Index>()) {
        let w = window_for_radius(2.0, CubeGrid::new(2, D).unwrap(), D).unwrap();
        let base = sample(seed, 4.0, &w, &MarkLaw::Unit, true).unwrap();
        let cubes: Vec<u64> = w.cubes().iter().copied().collect();
        let cube = cubes[pick.index(cubes.len())];
        let other = base.resample_cube(cube, salt, &MarkLaw::Unit).unwrap();
        let outside = |r: &rcm_core::Realization| {
            r.points.iter().filter(|p| p.id.cube != cube).cloned().collect::<Vec<_>>()
        };
        prop_assert_eq!(outside(&base), outside(&other));
    }

    #[test]
    fn cube_index_round_trips(z in prop::collection::vec(-40i64..40, 1..5)) {
        let i = index_of(&z);
        prop_assert_eq!(z_of(i, z.len()).to_vec(), z);
    }

    #[test]
    fn cube_index_is_a_bijection_on_small_indices(i in 0u64..200_000, dim in 1usize..4) {
        prop_assert_eq!(index_of(&z_of(i, dim)), i);
    }

    #[test]
    fn points_land_in_their_cube(x in -20.0f64..20.0, y in -20.0f64..20.0) {
        let g = CubeGrid::new(2, D).unwrap();
        let p = [x, y];
        prop_assert!(g.contains(g.cube_index(&p), &p));
    }
}
