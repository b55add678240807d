use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use hodge4d::assembly::{assemble_load, assemble_operators, assemble_system, reduce_with_bc};
use hodge4d::dof::{assemble_d0, build_dofmap, interpolate_form0, interpolate_form1};
use hodge4d::reference::local_matrices;
use hodge4d::scenarios::{
    self, error_norm, example1_exact, example1_load_source, example2_setup, Example2Config,
};
use hodge4d::sparse::{dot, norm};
use hodge4d::{BcSpec, DofMap, Form1Value, Mesh4};

fn setup(div: [usize; 4], ext: [f64; 4]) -> (Mesh4, DofMap, DofMap) {
    let m = Mesh4::new(div, ext, false).unwrap();
    let bc = BcSpec::homogeneous();
    let d0 = build_dofmap(&m, 0, &bc).unwrap();
    let d1 = build_dofmap(&m, 1, &bc).unwrap();
    (m, d0, d1)
}

/// Straight scatter of local matrices, visiting cells back to front.
fn naive_scatter(
    m: &Mesh4,
    local: &DMatrix<f64>,
    rows: impl Fn(usize) -> Vec<usize>,
    n_rows: usize,
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n_rows, m.num_edges());
    for c in (0..m.num_cells()).rev() {
        let (r, e) = (rows(c), m.cell_edges(c));
        for (i, &gi) in r.iter().enumerate() {
            for (j, &gj) in e.iter().enumerate() {
                out[(gi, gj)] += local[(i, j)];
            }
        }
    }
    out
}

#[test]
fn gather_assembly_matches_naive_scatter() {
    let (m, d0, d1) = setup([2, 3, 2, 3], [1.0, 0.8, 1.2, 1.0]);
    let ops = assemble_operators(&m, &d0, &d1).unwrap();
    let lm = local_matrices(m.spacings(), 2).unwrap();
    let a = naive_scatter(
        &m,
        &lm.stiffness,
        |c| m.cell_edges(c).to_vec(),
        m.num_edges(),
    );
    let b = naive_scatter(
        &m,
        &lm.constraint,
        |c| m.cell_nodes(c).to_vec(),
        m.num_nodes(),
    );
    let m1 = naive_scatter(&m, &lm.mass1, |c| m.cell_edges(c).to_vec(), m.num_edges());
    assert!((ops.stiffness.to_dense() - a).abs().max() < 1e-12);
    assert!((ops.constraint.to_dense() - b).abs().max() < 1e-12);
    assert!((ops.mass1.to_dense() - m1).abs().max() < 1e-12);
}

#[test]
fn operators_are_symmetric_and_mass_is_spd() {
    let (m, d0, d1) = setup([2, 2, 3, 2], [1.0; 4]);
    let ops = assemble_operators(&m, &d0, &d1).unwrap();
    assert!(ops.stiffness.asymmetry() < 1e-13);
    assert!(ops.mass0.asymmetry() < 1e-13);
    assert!(ops.mass1.asymmetry() < 1e-13);
    assert!(ops.mass1.to_dense().cholesky().is_some());
    assert!(ops.mass0.to_dense().cholesky().is_some());
}

#[test]
fn constraint_is_gradient_against_mass() {
    // B = (M1 D0)^T on all DOFs
    let (m, d0, d1) = setup([2, 2, 2, 3], [1.0, 1.0, 0.5, 1.0]);
    let ops = assemble_operators(&m, &d0, &d1).unwrap();
    let grad = assemble_d0(&m, &d0, &d1).unwrap().to_dense();
    let expect = (ops.mass1.to_dense() * grad).transpose();
    assert!((ops.constraint.to_dense() - expect).abs().max() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stiffness_is_positive_semidefinite(seed in any::<u64>()) {
        let (m, d0, d1) = setup([2, 2, 2, 2], [1.0; 4]);
        let a = assemble_operators(&m, &d0, &d1).unwrap().stiffness;
        let mut rng = StdRng::seed_from_u64(seed);
        let u: Vec<f64> = (0..m.num_edges()).map(|_| rng.random_range(-1.0..1.0)).collect();
        prop_assert!(dot(&u, &a.mul_vec(&u)) >= -1e-12 * dot(&u, &u));
    }
}

#[test]
fn stiffness_kills_constants_and_gradients() {
    let (m, d0, d1) = setup([2, 3, 2, 2], [1.0; 4]);
    let ops = assemble_operators(&m, &d0, &d1).unwrap();
    let c = interpolate_form1(&m, |_| Form1Value::new(1.5, -2.0, 0.25, 3.0));
    assert!(norm(&ops.stiffness.mul_vec(&c)) < 1e-12);
    let g = assemble_d0(&m, &d0, &d1)
        .unwrap()
        .mul_vec(&interpolate_form0(&m, |p| p[1] * p[2] * p[3] + p[0]));
    assert!(norm(&ops.stiffness.mul_vec(&g)) < 1e-12);
}

#[test]
fn divergence_free_fields_satisfy_constraint_on_free_rows() {
    let (m, d0, d1) = setup([2, 3, 3, 3], [1.0; 4]);
    let ops = assemble_operators(&m, &d0, &d1).unwrap();
    for f in [
        Form1Value::new(0.0, 1.0, 0.0, 0.0),
        Form1Value::new(2.0, 0.0, 0.0, -1.0),
        Form1Value::new(7.0, 0.0, 0.0, 0.0),
    ] {
        let bu = ops.constraint.mul_vec(&interpolate_form1(&m, |_| f));
        for &r in d0.free_dofs() {
            assert!(bu[r].abs() < 1e-13, "{f:?} row {r}: {}", bu[r]);
        }
    }
}

#[test]
fn constant_load_equals_mass_times_interpolant() {
    let (m, d0, d1) = setup([2, 2, 3, 2], [1.0, 2.0, 1.0, 1.0]);
    let c = Form1Value::new(0.5, 1.0, -2.0, 4.0);
    let load = assemble_load(&m, &d1, &|_: [f64; 4]| c, 2).unwrap();
    let ops = assemble_operators(&m, &d0, &d1).unwrap();
    let expect = ops.mass1.mul_vec(&interpolate_form1(&m, |_| c));
    let diff: Vec<f64> = load.iter().zip(&expect).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) < 1e-12 * norm(&expect));
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn load_quadrature_refinement() {
    // four points per axis carry a truncation error of a few 1e-8 at h = 1/4; six points are converged
    let (m, _, d1) = setup([4; 4], [1.0; 4]);
    let l: Vec<Vec<f64>> = [4, 6, 8]
        .iter()
        .map(|&q| assemble_load(&m, &d1, &example1_load_source, q).unwrap())
        .collect();
    assert!(max_diff(&l[1], &l[2]) < 1e-12);
    assert!(max_diff(&l[0], &l[2]) < 5e-8, "{}", max_diff(&l[0], &l[2]));
}

#[test]
fn error_norm_vanishes_on_discrete_fields() {
    let m = Mesh4::new([2, 3, 2, 2], [1.0, 1.0, 1.0, 1.5], false).unwrap();
    let f = |p: [f64; 4]| {
        Form1Value::new(
            p[1] * p[2] * p[3],
            p[2] * p[3] * p[0],
            p[1] * p[0],
            1.0 + p[1] * p[2],
        )
    };
    let u = interpolate_form1(&m, f);
    assert!(error_norm(&m, &u, &f, 4).unwrap() < 1e-12);
    let zero = vec![0.0; m.num_edges()];
    let c = Form1Value::new(1.0, 0.0, 2.0, 0.0);
    // |c| times the square root of the volume
    let e = error_norm(&m, &zero, &|_| c, 2).unwrap();
    assert!((e - 5f64.sqrt() * 1.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn error_norm_quadrature_refinement() {
    let m = Mesh4::new([4; 4], [1.0; 4], false).unwrap();
    let sol = scenarios::solve_example1(&m, scenarios::SolverChoice::Krylov).unwrap();
    let e: Vec<f64> = [4, 6, 8]
        .iter()
        .map(|&q| error_norm(&m, sol.u.values(), &example1_exact, q).unwrap())
        .collect();
    assert!((e[1] - e[2]).abs() < 1e-10 * e[2]);
    assert!((e[0] - e[2]).abs() < 2e-6 * e[2], "{e:?}");
}

#[test]
fn electrode_lifting_drives_the_rhs_without_a_source() {
    let m = Mesh4::new([4, 4, 4, 4], [1.0; 4], false).unwrap();
    let setup = example2_setup(&Example2Config::default(), &m).unwrap();
    let d0 = build_dofmap(&m, 0, &setup.bc0).unwrap();
    let d1 = build_dofmap(&m, 1, &setup.bc1).unwrap();
    let zero = |_: [f64; 4]| Form1Value::ZERO;
    let sys = assemble_system(&m, &d0, &d1, &zero, 2).unwrap();
    assert!(norm(&sys.rhs_u) > 1.0);
    // the lifting is pure dt, so it has no spatial gradient part against sigma
    assert!(norm(&sys.rhs_sigma) < 1e-12);

    let lifted = d1.expand(&vec![0.0; d1.n_free()]).unwrap();
    for id in d1.constrained_dofs() {
        assert_eq!(lifted.values()[id], d1.lifting(id).unwrap());
    }
    let nonzero = d1
        .constrained_dofs()
        .iter()
        .filter(|&&id| lifted.values()[id] != 0.0)
        .count();
    assert!(nonzero > 0);
}

#[test]
fn lifting_a_discrete_field_reproduces_it() {
    // with the exact boundary values of a discrete field and its own load, the free part solves A u = rhs
    let (m, d0, _) = setup([2, 3, 2, 2], [1.0; 4]);
    let f = |p: [f64; 4]| Form1Value::new(p[1] * p[2], p[0] * p[3], 0.0, p[1]);
    let full = interpolate_form1(&m, f);
    let bc1 = BcSpec::with_values(
        (0..m.num_edges())
            .filter(|&id| m.is_lateral(&m.entity(1, id).unwrap()))
            .map(|id| (id, full[id]))
            .collect(),
        None,
    );
    let d1 = build_dofmap(&m, 1, &bc1).unwrap();
    let ops = assemble_operators(&m, &d0, &d1).unwrap();
    let load = ops.stiffness.mul_vec(&full);
    let sys = reduce_with_bc(&ops, &load, &d0, &d1).unwrap();
    let free = d1.restrict(&full);
    let r: Vec<f64> = sys
        .a
        .mul_vec(&free)
        .iter()
        .zip(&sys.rhs_u)
        .map(|(a, b)| a - b)
        .collect();
    assert!(norm(&r) < 1e-12 * norm(&load).max(1.0));
    // B_full u = B_ff u_f + B_fc lift, so B_ff u_f - rhs_sigma equals B_full u on free rows
    let bu = ops.constraint.mul_vec(&full);
    let expect: Vec<f64> = d0.free_dofs().iter().map(|&r| bu[r]).collect();
    let diff: Vec<f64> = sys
        .b
        .mul_vec(&free)
        .iter()
        .zip(&sys.rhs_sigma)
        .zip(&expect)
        .map(|((a, s), e)| a - s - e)
        .collect();
    assert!(norm(&diff) < 1e-12);
}
