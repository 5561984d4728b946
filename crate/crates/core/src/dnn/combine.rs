// SPDX-License-Identifier: Apache-2.0

//! Structural operations on networks: side-by-side stacking, sequential
//! composition, input rewiring and depth padding.

use super::activation::{Activation, ActivationKind};
use super::layer::Layer;
use super::network::Network;
use crate::error::{input, Result};

/// Stack layers vertically. With `shared_input` every block reads the same
/// input vector; otherwise the inputs are concatenated (block-diagonal).
fn stack(layers: &[&Layer], shared_input: bool) -> Result<Layer> {
    let cols = if shared_input {
        layers[0].cols()
    } else {
        layers.iter().map(|l| l.cols()).sum()
    };
    let mut rows = Vec::new();
    let mut bias = Vec::new();
    let mut col_off = 0;
    for l in layers {
        if shared_input && l.cols() != cols {
            return input("parallelized networks must share the input dimension");
        }
        for i in 0..l.rows() {
            rows.push(l.row(i).map(|(j, v)| (j + col_off, v)).collect());
        }
        bias.extend_from_slice(l.bias());
        if !shared_input {
            col_off += l.cols();
        }
    }
    Layer::from_sparse_rows(cols, rows, bias)
}

/// Run two networks side by side on the same input and concatenate outputs.
pub fn parallelize(a: &Network, b: &Network) -> Result<Network> {
    parallelize_many(&[a, b])
}

pub fn parallelize_many(nets: &[&Network]) -> Result<Network> {
    let Some(first) = nets.first() else {
        return input("nothing to parallelize");
    };
    for n in &nets[1..] {
        if n.depth() != first.depth() {
            return input(format!("depth mismatch: {} vs {}", first.depth(), n.depth()));
        }
        if n.activation() != first.activation() {
            return input("activation mismatch");
        }
        if n.input_dim() != first.input_dim() {
            return input("input dimension mismatch");
        }
        if n.clamp() != first.clamp() {
            return input("output clamp mismatch");
        }
    }
    let layers = (0..first.layers().len())
        .map(|k| {
            let ls: Vec<&Layer> = nets.iter().map(|n| &n.layers()[k]).collect();
            stack(&ls, k == 0)
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(first.activation(), layers, first.clamp())
}

/// Prepend `x ↦ σ(A x + offset)` as a new hidden layer. When σ is not the
/// identity on `[1/4, 3/4]` the affine map is merged into the first layer
/// instead, leaving the depth unchanged.
pub fn compose_affine_input(net: &Network, a: &[Vec<f64>], offset: &[f64]) -> Result<Network> {
    let d = net.input_dim();
    if a.len() != d || offset.len() != d {
        return input(format!("affine input map must be {d}×{d} with a length-{d} offset"));
    }
    let pre = Layer::from_dense(d, a, offset.to_vec())?;
    let (act, mut layers, clamp) = net.clone().into_parts();
    if act.fixes_unit_segment() {
        layers.insert(0, pre);
    } else {
        layers[0] = layers[0].compose(&pre)?;
    }
    Network::new(act, layers, clamp)
}

/// `outer ∘ inner`, merging the adjacent affine maps so depths add.
pub fn then(outer: &Network, inner: &Network) -> Result<Network> {
    if inner.clamp().is_some() {
        return input("cannot compose after a clamped network");
    }
    if outer.input_dim() != inner.output_dim() {
        return input(format!(
            "outer network reads {} values but inner emits {}",
            outer.input_dim(),
            inner.output_dim()
        ));
    }
    let both_hidden = outer.depth() > 0 && inner.depth() > 0;
    if both_hidden && outer.activation() != inner.activation() {
        return input("activation mismatch");
    }
    let act = if inner.depth() > 0 { inner.activation() } else { outer.activation() };
    let (_, ilayers, _) = inner.clone().into_parts();
    let (_, olayers, clamp) = outer.clone().into_parts();
    let mut layers = ilayers;
    let last = layers.pop().expect("networks have at least one layer");
    let mut rest = olayers.into_iter();
    let merged = rest.next().expect("networks have at least one layer").compose(&last)?;
    layers.push(merged);
    layers.extend(rest);
    Network::new(act, layers, clamp)
}

/// Depth-0 map picking `indices` out of a `total_in`-dimensional input.
pub fn select_inputs(act: Activation, total_in: usize, indices: &[usize]) -> Result<Network> {
    if indices.is_empty() {
        return input("select at least one input");
    }
    let rows = indices.iter().map(|&j| vec![(j, 1.0)]).collect();
    let l = Layer::from_sparse_rows(total_in, rows, vec![0.0; indices.len()])?;
    Network::new(act, vec![l], None)
}

/// Constant `1/(1+a)` such that `v = c·(σ(v) − σ(−v))` for a piecewise-linear σ.
fn signed_passthrough_scale(act: Activation) -> Result<f64> {
    match act.kind() {
        ActivationKind::Relu => Ok(1.0),
        ActivationKind::LeakyRelu => Ok(1.0 / (1.0 + act.shape().unwrap_or(0.0))),
        _ => input("depth padding requires a piecewise-linear activation"),
    }
}

/// Append identity hidden layers until the network has depth `target`.
pub fn pad_to_depth(net: &Network, target: usize) -> Result<Network> {
    let depth = net.depth();
    if target < depth {
        return input(format!("cannot pad a depth-{depth} network down to {target}"));
    }
    if target == depth {
        return Ok(net.clone());
    }
    let act = net.activation();
    let c = signed_passthrough_scale(act)?;
    let (_, mut layers, clamp) = net.clone().into_parts();
    let last = layers.pop().expect("networks have at least one layer");
    let dy = last.rows();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(2 * dy);
    let mut bias = Vec::with_capacity(2 * dy);
    for sign in [1.0, -1.0] {
        for i in 0..dy {
            rows.push(last.row(i).map(|(j, v)| (j, sign * v)).collect());
            bias.push(sign * last.bias()[i]);
        }
    }
    layers.push(Layer::from_sparse_rows(last.cols(), rows, bias)?);
    for _ in 1..target - depth {
        let rows = (0..2 * dy)
            .map(|i| {
                let (p, m) = if i < dy { (i, i + dy) } else { (i, i - dy) };
                vec![(p, c), (m, -c)]
            })
            .collect();
        layers.push(Layer::from_sparse_rows(2 * dy, rows, vec![0.0; 2 * dy])?);
    }
    let rows = (0..dy).map(|i| vec![(i, c), (i + dy, -c)]).collect();
    layers.push(Layer::from_sparse_rows(2 * dy, rows, vec![0.0; dy])?);
    Network::new(act, layers, clamp)
}

/// Sum all outputs of `net` into a single output.
pub fn sum_outputs(net: &Network) -> Result<Network> {
    let k = net.output_dim();
    let l = Layer::from_sparse_rows(k, vec![(0..k).map(|j| (j, 1.0)).collect()], vec![0.0])?;
    then(&Network::new(net.activation(), vec![l], None)?, net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_net(seed: u64, widths: &[usize], act: Activation) -> Network {
        let mut rng = crate::seed::rng(seed, "combine", &[]);
        let z = Network::zeros(act, widths, None).unwrap();
        let theta: Vec<f64> = (0..z.param_stats().count)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(-1.0..1.0) })
            .collect();
        z.with_param_vector(&theta).unwrap()
    }

    #[test]
    fn parallelize_projects_back_to_blocks() {
        let a = random_net(1, &[2, 3, 4, 1], Activation::relu());
        let b = random_net(2, &[2, 4, 2, 2], Activation::relu());
        let p = parallelize(&a, &b).unwrap();
        let (sa, sb, sp) = (a.param_stats(), b.param_stats(), p.param_stats());
        assert_eq!(sp.sparsity, sa.sparsity + sb.sparsity);
        assert!(sp.width <= sa.width + sb.width);
        assert!(sp.max_abs <= sa.max_abs.max(sb.max_abs));
        let mut rng = crate::seed::rng(3, "pts", &[]);
        for _ in 0..1000 {
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let out = p.forward(&x).unwrap();
            assert_eq!(out[..1], a.forward(&x).unwrap()[..]);
            assert_eq!(out[1..], b.forward(&x).unwrap()[..]);
        }
        let dup = parallelize(&a, &a).unwrap().forward(&[0.3, 0.1]).unwrap();
        assert_eq!(dup[0], dup[1]);
    }

    #[test]
    fn parallelize_rejects_mismatch() {
        let a = random_net(1, &[2, 3, 1], Activation::relu());
        let b = random_net(2, &[2, 3, 3, 1], Activation::relu());
        assert!(parallelize(&a, &b).is_err());
        let c = random_net(2, &[2, 3, 1], Activation::leaky_relu(0.1).unwrap());
        assert!(parallelize(&a, &c).is_err());
    }

    #[test]
    fn compose_affine_input_examples() {
        let net = random_net(5, &[2, 3, 3, 3, 3, 3, 1], Activation::relu());
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let same = compose_affine_input(&net, &eye, &[0.0, 0.0]).unwrap();
        assert_eq!(same.depth(), 6);
        let x = [0.3, 0.7];
        assert_eq!(same.forward(&x).unwrap(), net.forward(&x).unwrap());

        let t = vec![vec![0.25, 0.0], vec![0.0, 0.25]];
        let tn = compose_affine_input(&net, &t, &[0.5, 0.5]).unwrap();
        assert_eq!(tn.param_stats().sparsity, net.param_stats().sparsity + 4);
        let y = [-0.8, 0.4];
        let ty = [y[0] / 4.0 + 0.5, y[1] / 4.0 + 0.5];
        assert_eq!(tn.forward(&y).unwrap(), net.forward(&ty).unwrap());
    }

    #[test]
    fn then_and_padding_preserve_function() {
        for act in [Activation::relu(), Activation::leaky_relu(0.3).unwrap()] {
            let inner = random_net(7, &[1, 4, 2], act);
            let outer = random_net(8, &[2, 3, 1], act);
            let both = then(&outer, &inner).unwrap();
            assert_eq!(both.depth(), 2);
            let padded = pad_to_depth(&both, 5).unwrap();
            assert_eq!(padded.depth(), 5);
            for k in 0..50 {
                let x = [-2.0 + 0.08 * k as f64];
                let mid = inner.forward(&x).unwrap();
                let want = outer.forward(&mid).unwrap()[0];
                assert!((both.forward(&x).unwrap()[0] - want).abs() < 1e-12);
                assert!((padded.forward(&x).unwrap()[0] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn select_and_sum() {
        let sel = select_inputs(Activation::relu(), 3, &[2, 0]).unwrap();
        assert_eq!(sel.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![3.0, 1.0]);
        let s = sum_outputs(&sel).unwrap();
        assert_eq!(s.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![4.0]);
    }
}
