use proptest::prelude::*;

use salience::embeddings::cosine;
use salience::kernels::{default_bank, kernel_backward, kernel_features, KernelBank};

fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, dim)
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    (1usize..10).prop_flat_map(|dim| (vec_strategy(dim), proptest::collection::vec(vec_strategy(dim), 0..8)))
}

fn refs(c: &[Vec<f64>]) -> Vec<&[f64]> {
    c.iter().map(Vec::as_slice).collect()
}

proptest! {
    #[test]
    fn cosine_is_bounded_symmetric_and_scale_free(
        (u, v) in (1usize..12).prop_flat_map(|d| (vec_strategy(d), vec_strategy(d))),
        a in 0.01f64..100.0,
    ) {
        let c = cosine(&u, &v).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
        prop_assert_eq!(c, cosine(&v, &u).unwrap());
        let scaled: Vec<f64> = u.iter().map(|x| a * x).collect();
        prop_assert!((cosine(&scaled, &v).unwrap() - c).abs() < 1e-12);
    }

    #[test]
    fn kernels_ignore_context_order_and_scale((t, ctx) in instance(), a in 0.1f64..10.0, rot in 0usize..8) {
        let bank = default_bank();
        let base = kernel_features(&t, &refs(&ctx), &bank).unwrap();
        let mut shuffled = ctx.clone();
        if !shuffled.is_empty() {
            let r = rot % shuffled.len();
            shuffled.rotate_left(r);
            shuffled.reverse();
        }
        let scaled: Vec<Vec<f64>> = shuffled.iter().map(|c| c.iter().map(|x| a * x).collect()).collect();
        let other = kernel_features(&t, &refs(&scaled), &bank).unwrap();
        for (x, y) in base.iter().zip(&other) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        for &x in &base {
            prop_assert!(x >= 0.0 && x <= ctx.len() as f64 + 1e-12);
        }
    }

    #[test]
    fn kernel_backward_matches_finite_differences((t, ctx) in instance(), up in proptest::collection::vec(-1.0f64..1.0, 11)) {
        // Wide kernels keep the response smooth enough for f64 central differences.
        let bank = KernelBank::new(vec![-0.5, 0.0, 0.4, 0.8, 1.0, -1.0, 0.2, 0.6, -0.2, 0.9, 0.1], vec![0.5; 11]).unwrap();
        let objective = |t: &[f64], ctx: &[Vec<f64>]| -> f64 {
            kernel_features(t, &refs(ctx), &bank).unwrap().iter().zip(&up).map(|(p, u)| p * u).sum()
        };
        prop_assume!(t.iter().map(|x| x * x).sum::<f64>() > 0.1);
        prop_assume!(ctx.iter().all(|c| c.iter().map(|x| x * x).sum::<f64>() > 0.1));
        let (dt, dc) = kernel_backward(&t, &refs(&ctx), &bank, &up).unwrap();
        let h = 1e-6;
        let check = |analytic: f64, plus: f64, minus: f64| {
            let numeric = (plus - minus) / (2.0 * h);
            (analytic - numeric).abs() <= 1e-5 * analytic.abs().max(1.0)
        };
        for i in 0..t.len() {
            let (mut p, mut m) = (t.clone(), t.clone());
            p[i] += h;
            m[i] -= h;
            prop_assert!(check(dt[i], objective(&p, &ctx), objective(&m, &ctx)));
        }
        for j in 0..ctx.len() {
            for i in 0..t.len() {
                let (mut p, mut m) = (ctx.clone(), ctx.clone());
                p[j][i] += h;
                m[j][i] -= h;
                prop_assert!(check(dc[j][i], objective(&t, &p), objective(&t, &m)));
            }
        }
    }
}

#[test]
fn exact_match_kernel_counts_duplicates() {
    let bank = default_bank();
    let t = [0.3, -1.2, 2.0];
    let dup = [0.6, -2.4, 4.0];
    let phi = kernel_features(&t, &[&dup, &dup, &[1.0, 0.0, 0.0]], &bank).unwrap();
    assert!((phi[0] - 2.0).abs() < 1e-9);
}
