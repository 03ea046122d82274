use wiretap_core::channel::{ChannelClass, WiretapChannel};
use wiretap_core::matcore::{HermMatrix, Matrix};
use wiretap_core::objective::{tilde_i, NoiseCorrelation, TildeForm};
use wiretap_core::optimizer::{maximize_secrecy, OptimizerOptions};
use wiretap_core::riccati::{
    build_m, eigenspace_minus_one, eve_form, feasibility_search, invariance_residual, jordan_data, jordan_j,
    main_block, minus_one_eigenpair, solve_a_degraded, solve_a_lowrank, DegradedForm, RiccatiSolution,
    FEASIBILITY_TRIES,
};
use wiretap_core::verify::Sampler;
use wiretap_core::Error;

/// Random channel with `n_M = n_E = n` and a covariance of random rank.
fn instance(s: &mut Sampler, n: usize, class: Option<ChannelClass>) -> (WiretapChannel, HermMatrix, usize) {
    let p = s.uniform(0.3, 4.0);
    let ch = s.channel(n, n, n, p, class).unwrap();
    let r = (s.uniform(0.0, (n + 1) as f64) as usize).min(n);
    (ch.clone(), s.covariance_of_rank(n, r, p), r)
}

#[test]
fn minus_one_is_an_eigenvalue() {
    let mut s = Sampler::new(1);
    for i in 0..50 {
        let n = 1 + i % 3;
        let (ch, k, _) = instance(&mut s, n, None);
        let prob = build_m(&ch, &k).unwrap();
        let (lambda, res) = minus_one_eigenpair(&prob).unwrap();
        assert!(res <= 1e-8 && (lambda + 1.0).norm() <= 1e-6, "instance {i}: {lambda} {res:e}");
        assert!(prob.factorization_residual() <= 1e-9);
    }
}

#[test]
fn kernel_of_m_plus_identity() {
    let mut s = Sampler::new(2);
    for i in 0..50 {
        let n = 1 + i % 3;
        let (ch, k, r) = instance(&mut s, n, None);
        let prob = build_m(&ch, &k).unwrap();
        let q = eigenspace_minus_one(&prob).unwrap();
        // Orthonormal and annihilated by M + I.
        assert!((&q.adj_mul(&q) - &Matrix::identity(q.cols())).frobenius() < 1e-10);
        assert!((&prob.matrix().add_identity(1.0) * &q).frobenius() < 1e-8 * prob.matrix().frobenius());
        assert!(q.cols() >= ch.n_m());
        assert!(q.cols() >= 2 * n - r, "instance {i}: dim {} rank {r}", q.cols());
        // The eavesdropper-form graph lies inside.
        let s_eve = Matrix::vstack(&[&Matrix::identity(ch.n_m()), &eve_form(&ch).unwrap()]);
        let outside = &s_eve - &(&q * &q.adj_mul(&s_eve));
        assert!(outside.frobenius() <= 1e-8 * s_eve.frobenius());
    }
}

#[test]
fn jordan_blocks_are_invariant() {
    let mut s = Sampler::new(3);
    for i in 0..50 {
        let n = 1 + i % 3;
        let (ch, k, r) = instance(&mut s, n, None);
        let prob = build_m(&ch, &k).unwrap();
        assert!(invariance_residual(prob.matrix(), &main_block(&ch).unwrap()).unwrap() <= 1e-8);
        if r > 0 {
            let jd = jordan_data(&ch, &k).unwrap();
            let j = jordan_j(&ch, &k).unwrap();
            assert!(invariance_residual(&j, &jd.z).unwrap() <= 1e-8);
            assert_eq!(jd.u_x.cols(), r);
            assert!((&jd.u_x.mul_adj(&jd.u_x) - k.as_matrix()).frobenius() < 1e-9);
        }
    }
}

#[test]
fn low_rank_solutions_solve_the_equation() {
    let mut s = Sampler::new(4);
    let mut built = 0;
    for i in 0..60 {
        let n = 2 + i % 2;
        let (ch, k, r) = instance(&mut s, n, None);
        if r == n {
            assert!(matches!(
                solve_a_lowrank(&ch, &k, &Matrix::zeros(n, 0), &Matrix::identity(r)),
                Err(Error::NotRankDeficient { .. })
            ));
            continue;
        }
        let w = s.gaussian(n, n - r);
        let v = s.gaussian(r, r).add_identity(1.0);
        let sol = solve_a_lowrank(&ch, &k, &w, &v).unwrap();
        assert!(sol.residual <= 1e-8, "instance {i}: {:e}", sol.residual);
        assert!(sol.kernel_identity <= 1e-8);
        built += 1;
    }
    assert!(built > 20);
}

fn assert_stationary(ch: &WiretapChannel, k: &HermMatrix, sol: &RiccatiSolution, s: &mut Sampler) {
    let a = sol.correlation().unwrap();
    let f = |m: &Matrix| tilde_i(ch, k, &NoiseCorrelation::new(m.clone()).unwrap(), TildeForm::Raw).unwrap();
    let h = 1e-5;
    for _ in 0..20 {
        let d = s.gaussian(ch.n_m(), ch.n_e());
        let d = d.scale(1.0 / d.frobenius());
        let fd = (f(&(a.matrix() + &d.scale(h))) - f(&(a.matrix() - &d.scale(h)))) / (2.0 * h);
        assert!(fd.abs() <= 1e-5, "directional derivative {fd:e}");
    }
}

#[test]
fn feasible_solutions_are_stationary_in_a() {
    let mut s = Sampler::new(5);
    for i in 0..10 {
        let n = 2 + i % 2;
        let ch = s.channel(n, n, n, 1.0, Some(ChannelClass::Indefinite)).unwrap();
        let k = maximize_secrecy(&ch, &OptimizerOptions::default()).k_star.matrix().clone();
        let sol = feasibility_search(&ch, &k, i as u64, FEASIBILITY_TRIES).unwrap();
        assert!(sol.is_certifiable());
        assert_stationary(&ch, &k, &sol, &mut s);

        let main = s.channel(n, n, n, 1.0, Some(ChannelClass::DegradedMain)).unwrap();
        let k = s.covariance(n, 1.0);
        assert_stationary(&main, &k, &solve_a_degraded(&main, &k, DegradedForm::Main).unwrap(), &mut s);
        let eve = main.swapped();
        assert_stationary(&eve, &k, &solve_a_degraded(&eve, &k, DegradedForm::Eve).unwrap(), &mut s);
    }
}
