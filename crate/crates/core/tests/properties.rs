use karlin_core::assembler::{assemble, EpsilonChoice, SimParams, SkipGaussian};
use karlin_core::geometry::{linspace01, Geometry, Point, SphereIndex};
use karlin_core::occupancy::{parity_of_points, OccupancyOptions, OccupancySampler, SamplerChoice};
use karlin_core::smalljump::CovarianceKernel;
use karlin_core::stats::{c_alpha, sibuya_pmf};
use karlin_core::RngStream;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn sorted_axis() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(1u32..=1000, 1..8).prop_map(|s| s.into_iter().map(|k| k as f64 / 1000.0).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn halfline_parity_counts_points_below_each_level(
        grid in sorted_axis(),
        xs in prop::collection::vec(0.0f64..1.0, 0..40),
    ) {
        let g = Geometry::half_line(grid.clone()).unwrap();
        let points: Vec<Point> = xs.iter().map(|&x| Point::Line(x)).collect();
        let bits = parity_of_points(&g, &points);
        for (i, t) in grid.iter().enumerate() {
            let count = xs.iter().filter(|&&x| x <= *t).count();
            prop_assert_eq!(bits[i] as usize, count % 2);
        }
    }

    #[test]
    fn rectangle_parity_counts_points_in_each_box(
        t1 in sorted_axis(),
        t2 in sorted_axis(),
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..30),
    ) {
        let g = Geometry::rectangle(t1.clone(), t2.clone()).unwrap();
        let points: Vec<Point> = pts.iter().map(|&(x, y)| Point::Plane([x, y])).collect();
        let bits = parity_of_points(&g, &points);
        for (i, a) in t1.iter().enumerate() {
            for (j, b) in t2.iter().enumerate() {
                let count = pts.iter().filter(|&&(x, y)| x <= *a && y <= *b).count();
                prop_assert_eq!(bits[i * t2.len() + j] as usize, count % 2);
            }
        }
    }

    #[test]
    fn occupancy_is_binary_and_seed_determined(grid in sorted_axis(), beta in 0.05f64..0.95, seed in any::<u64>()) {
        let g = Geometry::half_line(grid).unwrap();
        for choice in [SamplerChoice::Fast, SamplerChoice::Generic] {
            let s = OccupancySampler::new(&g, beta, choice, OccupancyOptions::default()).unwrap();
            let a = s.sample(&mut RngStream::new(seed, 1));
            let b = s.sample(&mut RngStream::new(seed, 1));
            prop_assert_eq!(&a, &b);
            if let Ok(d) = a {
                prop_assert!(d.bits.iter().all(|&x| x <= 1));
                prop_assert_eq!(d.bits.len(), g.len());
            }
        }
    }

    #[test]
    fn kernel_matrices_are_positive_semidefinite(beta in 0.05f64..0.95, n in 2usize..6) {
        let geometries = [
            Geometry::half_line(linspace01(n)).unwrap(),
            Geometry::rectangle(linspace01(n), linspace01(3)).unwrap(),
            Geometry::chentsov(linspace01(n), linspace01(3)).unwrap(),
            Geometry::sphere_lattice(n, 3, SphereIndex::Pinned).unwrap(),
            Geometry::sphere_lattice(n, 3, SphereIndex::Hemisphere).unwrap(),
        ];
        for g in &geometries {
            let k = CovarianceKernel::new(g, beta).unwrap();
            let idx: Vec<usize> = (0..g.len()).collect();
            let m = DMatrix::from_row_slice(idx.len(), idx.len(), &k.matrix(&idx));
            let trace = m.trace();
            let min = SymmetricEigen::new(m).eigenvalues.min();
            prop_assert!(min >= -1e-9 * trace, "{}: {}", g.name(), min);
        }
    }
}

#[test]
fn sibuya_pmf_recursion() {
    for beta in [0.1, 0.37, 0.5, 0.9] {
        assert!((sibuya_pmf(beta, 1).unwrap() - beta).abs() < 1e-15);
        for k in 1..200u64 {
            let ratio = sibuya_pmf(beta, k + 1).unwrap() / sibuya_pmf(beta, k).unwrap();
            assert!((ratio - (k as f64 - beta) / (k as f64 + 1.0)).abs() < 1e-12, "beta {beta}, k {k}");
        }
    }
}

#[test]
fn stable_constant_at_one_and_continuity() {
    assert!((c_alpha(1.0).unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-15);
    assert!((c_alpha(1.0 - 1e-9).unwrap() - c_alpha(1.0 + 1e-9).unwrap()).abs() < 1e-7);
}

#[test]
fn fields_are_finite_and_reproducible_on_every_geometry() {
    let cases = [
        Geometry::half_line(linspace01(64)).unwrap(),
        Geometry::rectangle(linspace01(9), linspace01(7)).unwrap(),
        Geometry::chentsov(linspace01(9), linspace01(7)).unwrap(),
        Geometry::sphere_lattice(12, 7, SphereIndex::Pinned).unwrap(),
    ];
    for g in &cases {
        for (alpha, beta) in [(0.7, 0.6), (1.0, 0.7), (1.6, 0.8), (2.0, 0.6)] {
            let mut p = SimParams::new(alpha, beta);
            p.seed = 17;
            let a = assemble(g, &p).unwrap();
            assert_eq!(a, assemble(g, &p).unwrap(), "{} {alpha}", g.name());
            assert_eq!(a.combined.shape, g.shape());
            assert!(a.combined.values.iter().all(|v| v.is_finite()));
            if let Some(o) = g.origin_index() {
                assert_eq!(a.combined.values[o], 0.0);
            }
        }
    }
}

#[test]
fn jump_only_fields_are_zero_where_the_index_set_is_empty() {
    let g = Geometry::chentsov(linspace01(5), linspace01(4)).unwrap();
    let mut p = SimParams::new(1.5, 0.6);
    p.epsilon = EpsilonChoice::Fixed(0.01);
    p.skip_gaussian = SkipGaussian::Yes;
    for seed in 0..20 {
        p.seed = seed;
        assert_eq!(assemble(&g, &p).unwrap().combined.values[0], 0.0);
    }
}
