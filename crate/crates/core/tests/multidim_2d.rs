use dort_core::krylov::{gmres, SolveConfig};
use dort_core::multidim::{
    build_grid_2d, build_interpolators, build_transfer_2d, trace_rays, CartesianGrid, Grid2dSpec,
    Rect,
};
use dort_core::operator::{materialize_a, Transfer};
use dort_core::presets;
use dort_core::scattering::ScatteringKernel;
use dort_core::RhsMode;
use proptest::prelude::*;

#[test]
fn dense_composition_matches_apply() {
    let grid = build_grid_2d(&Grid2dSpec::new(6, 5, 4, 2)).unwrap();
    let tr = build_transfer_2d(&grid, |_, t| t).unwrap();
    let lambda = tr.materialize(10_000).unwrap();
    let (ns, nr) = (grid.cartesian.len(), grid.rays.len());
    for k in 0..nr {
        let block = tr.dense_block(k);
        for i in 0..ns {
            for j in 0..ns {
                assert!((lambda[(i * nr + k, j * nr + k)] - block[(i, j)]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn no_scattering_is_identity() {
    let p = presets::aniso2d(5, 5, 2, RhsMode::Physical).unwrap().with_scaled_gamma(0.0);
    let a = materialize_a(&p, 10_000).unwrap();
    for i in 0..p.n() {
        for j in 0..p.n() {
            assert_eq!(a[(i, j)], if i == j { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn lines_are_independent_for_unit_source() {
    let grid = build_grid_2d(&Grid2dSpec::new(7, 6, 2, 2)).unwrap();
    let tr = build_transfer_2d(&grid, |_, _| 0.0).unwrap();
    for rt in &tr.rays {
        let on_lines = rt.lambda_r().matvec(&vec![1.0; rt.family.n_nodes]);
        for (l, line) in rt.family.lines.iter().enumerate() {
            let d = rt.dtau[l];
            let mut prev = 0.0;
            for j in 0..line.len() {
                let expect = if j == 0 { 0.0 } else { (prev + d) / (1.0 + d) };
                assert!((on_lines[line.offset + j] - expect).abs() < 1e-14);
                prev = expect;
            }
        }
    }
}

fn gmres_iterations(n: usize) -> usize {
    let spec = Grid2dSpec::new(n, n, 4, 2);
    let p = presets::aniso2d_with(spec, ScatteringKernel::isotropic(), RhsMode::Physical).unwrap();
    assert_eq!(p.descriptor.n_omega, 8);
    let r = gmres(&p, p.rhs(), &SolveConfig::gmres(1e-12)).unwrap();
    assert!(r.converged);
    r.iterations
}

#[test]
fn gmres_count_flat_under_refinement() {
    let coarse = gmres_iterations(8);
    let fine = gmres_iterations(16);
    assert!(fine <= coarse + 3, "{coarse} -> {fine}");
}

#[test]
fn coupled_kernels_are_rejected_in_2d() {
    let spec = Grid2dSpec::new(4, 4, 2, 2);
    assert!(presets::aniso2d_with(spec, ScatteringKernel::IsotropicCrd, RhsMode::Ones).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpolators_are_averaging(
        nx in 2usize..12,
        ny in 2usize..12,
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        let grid = CartesianGrid::new(Rect::UNIT, nx, ny).unwrap();
        let family = trace_rays(&grid, [angle.cos(), angle.sin()], f64::INFINITY).unwrap();
        let (t_cr, t_rc) = build_interpolators(&family, &grid).unwrap();
        for t in [&t_cr, &t_rc] {
            for i in 0..t.n_rows() {
                prop_assert!((t.row_sum(i) - 1.0).abs() <= 1e-14);
            }
            prop_assert!(t.norm_inf() <= 1.0 + 1e-14);
        }
        // bilinear interpolation is exact on affine fields
        let f = |p: [f64; 2]| 0.3 + 2.0 * p[0] - 1.5 * p[1];
        let on_grid: Vec<f64> = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        let mut on_lines = vec![0.0; family.n_nodes];
        t_cr.apply(&on_grid, &mut on_lines);
        for (v, p) in on_lines.iter().zip(family.nodes()) {
            prop_assert!((v - f(p)).abs() < 1e-12);
        }
    }
}
