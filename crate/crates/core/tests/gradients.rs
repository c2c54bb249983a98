use std::rc::Rc;

use graphroar::autodiff::{Tape, Var};
use graphroar::gradcheck::max_gradient_error;
use graphroar::graph::GraphSample;
use graphroar::model::{ArchConfig, ArchKind, EdgeWeightedBatch, ModelParams};
use graphroar::tensor::Tensor;
use graphroar::Result;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

/// Values bounded away from zero, for ops with a kink or pole there.
fn away_from_zero(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    random(rows, cols, rng).map(|v| if v.abs() < 0.05 { v + 0.1 } else { v })
}

fn positive(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    random(rows, cols, rng).map(|v| v.abs() + 0.1)
}

/// Reduces a tensor to a scalar through fixed random weights so every
/// element gets a distinct adjoint.
fn project<'t>(out: Var<'t>, seed: u64) -> Result<Var<'t>> {
    let (r, c) = out.value().dims2();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let w = out.tape().constant(random(r, c, &mut rng));
    Ok(out.mul(w)?.sum())
}

fn check<F>(f: F, inputs: Vec<Tensor>)
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    let err = max_gradient_error(f, &inputs, STEP).unwrap();
    assert!(err < TOL, "relative error {err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matmul(seed in any::<u64>(), m in 1usize..5, k in 1usize..5, n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check(|_, v| project(v[0].matmul(v[1])?, seed), vec![random(m, k, &mut rng), random(k, n, &mut rng)]);
    }

    #[test]
    fn add_sub_mul(seed in any::<u64>(), r in 1usize..4, c in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = vec![random(r, c, &mut rng), random(r, c, &mut rng), random(1, 1, &mut rng)];
        check(|_, v| project(v[0].add(v[1])?.sub(v[0].mul(v[1])?)?.mul(v[2])?, seed), xs);
    }

    #[test]
    fn add_row_and_mul_rows(seed in any::<u64>(), r in 1usize..5, c in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = vec![random(r, c, &mut rng), random(1, c, &mut rng), random(r, 1, &mut rng)];
        check(|_, v| project(v[0].add_row(v[1])?.mul_rows(v[2])?, seed), xs);
    }

    #[test]
    fn relu_sigmoid_affine(seed in any::<u64>(), r in 1usize..4, c in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check(|_, v| project(v[0].relu().add(v[0].sigmoid().affine(3.0, -1.0))?, seed), vec![away_from_zero(r, c, &mut rng)]);
    }

    #[test]
    fn ln(seed in any::<u64>(), r in 1usize..4, c in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check(|_, v| project(v[0].ln(), seed), vec![positive(r, c, &mut rng)]);
    }

    #[test]
    fn powf(seed in any::<u64>(), r in 1usize..4, c in 1usize..4, p in -2.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check(move |_, v| project(v[0].powf(p), seed), vec![positive(r, c, &mut rng)]);
    }

    #[test]
    fn sum_and_mean(seed in any::<u64>(), r in 1usize..4, c in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check(|_, v| Ok(v[0].sum().mul(v[0].mean())?), vec![random(r, c, &mut rng)]);
    }

    #[test]
    fn gather_scatter(seed in any::<u64>(), r in 1usize..5, c in 1usize..4, picks in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx: Rc<[usize]> = (0..picks).map(|_| rng.gen_range(0..r)).collect();
        let x = random(r, c, &mut rng);
        check(
            move |_, v| project(v[0].gather_rows(idx.clone())?.scatter_add_rows(idx.clone(), r + 1)?, seed),
            vec![x],
        );
    }

    #[test]
    fn propagate(seed in any::<u64>(), n in 2usize..6, c in 1usize..4, edges in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src: Rc<[usize]> = (0..edges).map(|_| rng.gen_range(0..n)).collect();
        let dst: Rc<[usize]> = (0..edges).map(|_| rng.gen_range(0..n)).collect();
        let xs = vec![random(n, c, &mut rng), random(edges, 1, &mut rng)];
        check(move |_, v| project(v[0].propagate(v[1], src.clone(), dst.clone())?, seed), xs);
    }

    #[test]
    fn concat_and_segment_mean(seed in any::<u64>(), r in 2usize..6, c in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cut = rng.gen_range(0..=r);
        let ranges: Rc<[(usize, usize)]> = vec![(0, cut), (cut, r)].into();
        let xs = vec![random(r, c, &mut rng), random(r, 2, &mut rng)];
        check(move |_, v| project(v[0].concat_cols(v[1])?.segment_mean(ranges.clone())?, seed), xs);
    }

    #[test]
    fn cross_entropies(seed in any::<u64>(), g in 1usize..4, k in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let targets: Vec<usize> = (0..g).map(|_| rng.gen_range(0..k)).collect();
        let soft = positive(g, k, &mut rng);
        let x = random(g, k, &mut rng);
        check(move |_, v| v[0].cross_entropy(&targets)?.add(v[0].soft_cross_entropy(&soft)?), vec![x]);
    }
}

fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> GraphSample {
    // spanning path plus a few random chords
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    for _ in 0..3 {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && !edges.contains(&(a.min(b), a.max(b))) {
            edges.push((a.min(b), a.max(b)));
        }
    }
    GraphSample::new(n, edges, random(n, 3, rng), rng.gen_range(0..2)).unwrap()
}

#[test]
fn model_gradients_match_finite_differences() {
    for kind in [ArchKind::Gcn, ArchKind::Gin] {
        let mut checked = 0;
        for seed in 0..100u64 {
            if checked == 10 {
                break;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(5, &mut rng);
            let batch = EdgeWeightedBatch::single(&g);
            let mut params = ModelParams::init(&ArchConfig::new(kind, 3, 4, 2), seed).unwrap();
            for (_, t) in params.tensors.iter_mut() {
                // nonzero biases and eps so every parameter has a generic gradient
                if t.len() <= 4 {
                    for x in t.data_mut() {
                        *x = rng.gen_range(-0.3..0.3);
                    }
                }
            }
            let weights = Tensor::column((0..g.edge_count()).map(|_| rng.gen_range(0.2..1.0)).collect());
            let mut inputs = params.values();
            inputs.push(weights);
            let label = g.label();
            let result = max_gradient_error(
                |_, v| {
                    let (w, rest) = v.split_last().unwrap();
                    let bound = params.attach(rest)?;
                    bound.forward(&batch, Some(*w))?.logits.cross_entropy(&[label])
                },
                &inputs,
                STEP,
            );
            // a relu pre-activation within one step of zero: redraw
            let Ok(err) = result else { continue };
            assert!(err < 1e-3, "{kind} seed {seed}: {err}");
            checked += 1;
        }
        assert_eq!(checked, 10);
    }
}
