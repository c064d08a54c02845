//! Central finite-difference checks for every differentiable op.
//!
//! Each op is wrapped in a scalar loss; analytic gradients from the
//! backward pass must match (f(x+h) - f(x-h)) / 2h at h = 1e-5 with
//! relative error below 1e-4.

use arionet_rng::Rng;
use arionet_tensor::{backward, Tensor};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Check d(loss)/d(param) for every entry of `param`, where `loss`
/// rebuilds the graph from current parameter values.
fn check_param(param: &Tensor, loss: &dyn Fn() -> Tensor, label: &str) {
    param.zero_grad();
    let l = loss();
    backward(&l).unwrap();
    let analytic = param.grad_vec();

    let base = param.to_vec();
    for i in 0..base.len() {
        let mut bumped = base.clone();
        bumped[i] = base[i] + H;
        param.set_data(&bumped);
        let up = loss().item();
        bumped[i] = base[i] - H;
        param.set_data(&bumped);
        let down = loss().item();
        param.set_data(&base);
        let numeric = (up - down) / (2.0 * H);
        let err = rel_err(analytic[i], numeric);
        assert!(
            err < TOL,
            "{label}[{i}]: analytic {} vs numeric {} (rel err {err})",
            analytic[i],
            numeric
        );
    }
}

fn rand_param(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::param(shape, (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect())
}

fn rand_const(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::constant(shape, (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect())
}

/// Weighted sum turns any tensor into a scalar with nontrivial dout.
fn weighted(t: &Tensor, weights: &Tensor) -> Tensor {
    t.mul(weights).unwrap().sum_all()
}

#[test]
fn elementwise_ops_match_finite_differences() {
    let mut rng = Rng::seed_from_u64(21);
    let w = rand_param(&mut rng, &[3, 4]);
    let other = rand_const(&mut rng, &[3, 4]);
    let obs = rand_const(&mut rng, &[3, 4]);

    check_param(&w, &|| weighted(&w.add(&other).unwrap(), &obs), "add");
    check_param(&w, &|| weighted(&w.sub(&other).unwrap(), &obs), "sub");
    check_param(&w, &|| weighted(&w.mul(&other).unwrap(), &obs), "mul");
    check_param(&w, &|| weighted(&w.mul(&w).unwrap(), &obs), "mul self");
    check_param(&w, &|| weighted(&w.mul_scalar(-1.7), &obs), "mul_scalar");

    // Divide by values bounded away from zero.
    let denom = Tensor::constant(&[3, 4], (0..12).map(|i| 1.5 + (i as f64) * 0.1).collect());
    check_param(&w, &|| weighted(&w.div(&denom).unwrap(), &obs), "div num");
    let wpos = Tensor::param(&[3, 4], (0..12).map(|i| 1.0 + (i as f64) * 0.2).collect());
    let num = rand_const(&mut rng, &[3, 4]);
    check_param(&wpos, &|| weighted(&num.div(&wpos).unwrap(), &obs), "div den");
}

#[test]
fn unary_ops_match_finite_differences() {
    let mut rng = Rng::seed_from_u64(22);
    let obs = rand_const(&mut rng, &[2, 5]);

    // ReLU needs inputs away from the kink at 0.
    let w = Tensor::param(
        &[2, 5],
        (0..10).map(|i| if i % 2 == 0 { 0.4 + i as f64 * 0.1 } else { -0.5 - i as f64 * 0.1 }).collect(),
    );
    check_param(&w, &|| weighted(&w.relu(), &obs), "relu");

    let w = rand_param(&mut rng, &[2, 5]);
    check_param(&w, &|| weighted(&w.exp(), &obs), "exp");

    let wpos = Tensor::param(&[2, 5], (0..10).map(|i| 0.5 + i as f64 * 0.3).collect());
    check_param(&wpos, &|| weighted(&wpos.log(), &obs), "log");
}

#[test]
fn matrix_ops_match_finite_differences() {
    let mut rng = Rng::seed_from_u64(23);
    let a = rand_param(&mut rng, &[3, 4]);
    let b = rand_param(&mut rng, &[4, 2]);
    let obs = rand_const(&mut rng, &[3, 2]);
    check_param(&a, &|| weighted(&a.matmul(&b).unwrap(), &obs), "matmul lhs");
    check_param(&b, &|| weighted(&a.matmul(&b).unwrap(), &obs), "matmul rhs");

    let obs_t = rand_const(&mut rng, &[4, 3]);
    check_param(&a, &|| weighted(&a.transpose().unwrap(), &obs_t), "transpose");

    let bias = rand_param(&mut rng, &[4]);
    let obs_m = rand_const(&mut rng, &[3, 4]);
    check_param(&a, &|| weighted(&a.add_row(&bias).unwrap(), &obs_m), "add_row lhs");
    check_param(&bias, &|| weighted(&a.add_row(&bias).unwrap(), &obs_m), "add_row bias");
}

#[test]
fn rowwise_ops_match_finite_differences() {
    let mut rng = Rng::seed_from_u64(24);
    let w = rand_param(&mut rng, &[3, 6]);
    let obs = rand_const(&mut rng, &[3, 6]);
    check_param(&w, &|| weighted(&w.softmax(), &obs), "softmax");
    check_param(&w, &|| weighted(&w.layer_norm(1e-5), &obs), "layer_norm");
    check_param(&w, &|| weighted(&w.l2_normalize(), &obs), "l2_normalize");
}

#[test]
fn reductions_match_finite_differences() {
    let mut rng = Rng::seed_from_u64(25);
    let w = rand_param(&mut rng, &[4, 3]);
    let obs_row = rand_const(&mut rng, &[1, 3]);
    let obs_col = rand_const(&mut rng, &[4, 1]);
    check_param(&w, &|| weighted(&w.mean_axis(0).unwrap(), &obs_row), "mean axis 0");
    check_param(&w, &|| weighted(&w.mean_axis(1).unwrap(), &obs_col), "mean axis 1");
    check_param(&w, &|| weighted(&w.sum_axis(0).unwrap(), &obs_row), "sum axis 0");
    check_param(&w, &|| w.sum_all(), "sum_all");
}

#[test]
fn structural_ops_match_finite_differences() {
    let mut rng = Rng::seed_from_u64(26);
    let a = rand_param(&mut rng, &[2, 3]);
    let b = rand_param(&mut rng, &[2, 3]);
    let obs_rows = rand_const(&mut rng, &[4, 3]);
    let obs_cols = rand_const(&mut rng, &[2, 6]);
    check_param(&a, &|| {
        weighted(&Tensor::concat(&[a.clone(), b.clone()], 0).unwrap(), &obs_rows)
    }, "concat rows");
    check_param(&b, &|| {
        weighted(&Tensor::concat(&[a.clone(), b.clone()], 1).unwrap(), &obs_cols)
    }, "concat cols");

    let w = rand_param(&mut rng, &[4, 5]);
    let obs_r = rand_const(&mut rng, &[2, 5]);
    let obs_c = rand_const(&mut rng, &[4, 2]);
    check_param(&w, &|| weighted(&w.slice(0, 1, 2).unwrap(), &obs_r), "slice rows");
    check_param(&w, &|| weighted(&w.slice(1, 2, 2).unwrap(), &obs_c), "slice cols");

    // Dropout with a fixed seed is a fixed linear map.
    let w = rand_param(&mut rng, &[3, 4]);
    let obs = rand_const(&mut rng, &[3, 4]);
    check_param(&w, &|| weighted(&w.dropout(0.4, 77).unwrap(), &obs), "dropout");
}

#[test]
fn composed_graph_matches_finite_differences() {
    let mut rng = Rng::seed_from_u64(27);
    let x = rand_const(&mut rng, &[5, 3]);
    let w1 = rand_param(&mut rng, &[3, 8]);
    let b1 = rand_param(&mut rng, &[8]);
    let w2 = rand_param(&mut rng, &[8, 2]);
    let obs = rand_const(&mut rng, &[1, 2]);
    let loss = || {
        let h = x.matmul(&w1).unwrap().add_row(&b1).unwrap().relu();
        let h = h.layer_norm(1e-5);
        let out = h.matmul(&w2).unwrap().softmax().mean_axis(0).unwrap();
        weighted(&out, &obs)
    };
    check_param(&w1, &loss, "mlp w1");
    check_param(&b1, &loss, "mlp b1");
    check_param(&w2, &loss, "mlp w2");
}
