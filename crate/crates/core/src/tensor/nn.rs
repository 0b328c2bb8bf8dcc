use serde::{Deserialize, Serialize};

use super::{Result, Tensor, TensorError};
use crate::rng::Rng;

/// Whether stochastic layers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Eval,
}

/// (outer, axis extent, inner) decomposition around `axis`.
fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

/// Softmax along `axis`, computed after subtracting the per-slice maximum.
pub fn softmax(x: &Tensor, axis: usize) -> Result<Tensor> {
    if axis >= x.rank() {
        return Err(TensorError::InvalidAxis {
            axis,
            rank: x.rank(),
        });
    }
    let (outer, len, inner) = split_axis(x.shape(), axis);
    let mut out = x.to_vec();
    for o in 0..outer {
        for i in 0..inner {
            let at = |j: usize| o * len * inner + j * inner + i;
            let max = (0..len)
                .map(|j| out[at(j)])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for j in 0..len {
                let e = (out[at(j)] - max).exp();
                out[at(j)] = e;
                total += e;
            }
            for j in 0..len {
                out[at(j)] /= total;
            }
        }
    }
    let y = out.clone();
    Ok(Tensor::from_op(
        out,
        x.shape().to_vec(),
        "softmax",
        vec![x.clone()],
        Box::new(move |g| {
            // dx = y ⊙ (g − Σ g⊙y)
            let mut dx = vec![0.0; g.len()];
            for o in 0..outer {
                for i in 0..inner {
                    let at = |j: usize| o * len * inner + j * inner + i;
                    let dot: f64 = (0..len).map(|j| g[at(j)] * y[at(j)]).sum();
                    for j in 0..len {
                        dx[at(j)] = y[at(j)] * (g[at(j)] - dot);
                    }
                }
            }
            vec![Some(dx)]
        }),
    ))
}

/// Standardizes each last-axis row to zero mean and unit (biased) variance,
/// then applies `gain ⊙ x̂ + bias`.
pub fn layer_norm(x: &Tensor, gain: &Tensor, bias: &Tensor, eps: f64) -> Result<Tensor> {
    let width = *x
        .shape()
        .last()
        .ok_or(TensorError::InvalidAxis { axis: 0, rank: 0 })?;
    for p in [gain, bias] {
        if p.shape() != [width] {
            return Err(TensorError::ShapeMismatch {
                op: "layer_norm",
                lhs: x.shape().to_vec(),
                rhs: p.shape().to_vec(),
            });
        }
    }
    if !(eps > 0.0) {
        return Err(TensorError::InvalidArgument {
            op: "layer_norm",
            reason: format!("eps must be positive, got {eps}"),
        });
    }
    let rows = x.numel() / width;
    let mut normalized = vec![0.0; x.numel()];
    let mut inv_std = vec![0.0; rows];
    let mut out = vec![0.0; x.numel()];
    {
        let (xd, gd, bd) = (x.data(), gain.data(), bias.data());
        for r in 0..rows {
            let row = &xd[r * width..(r + 1) * width];
            let mu = row.iter().sum::<f64>() / width as f64;
            let var = row.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / width as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std[r] = inv;
            for c in 0..width {
                let xh = (row[c] - mu) * inv;
                normalized[r * width + c] = xh;
                out[r * width + c] = gd[c] * xh + bd[c];
            }
        }
    }
    let (pg, pb) = (gain.clone(), bias.clone());
    let px = x.clone();
    Ok(Tensor::from_op(
        out,
        x.shape().to_vec(),
        "layer_norm",
        vec![x.clone(), gain.clone(), bias.clone()],
        Box::new(move |g| {
            let gd = pg.data();
            let mut dgain = pg.requires_grad().then(|| vec![0.0; width]);
            let mut dbias = pb.requires_grad().then(|| vec![0.0; width]);
            let mut dx = px.requires_grad().then(|| vec![0.0; g.len()]);
            let n = width as f64;
            for r in 0..rows {
                let base = r * width;
                let mut sum_dxh = 0.0;
                let mut sum_dxh_xh = 0.0;
                for c in 0..width {
                    let gi = g[base + c];
                    let xh = normalized[base + c];
                    if let Some(dg) = dgain.as_mut() {
                        dg[c] += gi * xh;
                    }
                    if let Some(db) = dbias.as_mut() {
                        db[c] += gi;
                    }
                    let dxh = gi * gd[c];
                    sum_dxh += dxh;
                    sum_dxh_xh += dxh * xh;
                }
                if let Some(dx) = dx.as_mut() {
                    let inv = inv_std[r];
                    for c in 0..width {
                        let dxh = g[base + c] * gd[c];
                        let xh = normalized[base + c];
                        dx[base + c] = inv / n * (n * dxh - sum_dxh - xh * sum_dxh_xh);
                    }
                }
            }
            vec![dx, dgain, dbias]
        }),
    ))
}

/// Valid (unpadded) 1-D cross-correlation over time.
///
/// `x: [batch, time, ch_in]`, `kernels: [width, ch_in, ch_out]`,
/// `bias: [ch_out]` → `[batch, time - width + 1, ch_out]`.
pub fn conv1d(x: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let mismatch = |rhs: &Tensor| TensorError::ShapeMismatch {
        op: "conv1d",
        lhs: x.shape().to_vec(),
        rhs: rhs.shape().to_vec(),
    };
    if x.rank() != 3 || kernels.rank() != 3 {
        return Err(mismatch(kernels));
    }
    let (batch, time, ch_in) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (width, k_in, ch_out) = (kernels.shape()[0], kernels.shape()[1], kernels.shape()[2]);
    if k_in != ch_in {
        return Err(mismatch(kernels));
    }
    if bias.shape() != [ch_out] {
        return Err(mismatch(bias));
    }
    if width > time {
        return Err(TensorError::InvalidArgument {
            op: "conv1d",
            reason: format!("kernel width {width} exceeds time extent {time}"),
        });
    }
    let steps = time - width + 1;
    let mut out = vec![0.0; batch * steps * ch_out];
    {
        let (xd, kd, bd) = (x.data(), kernels.data(), bias.data());
        for b in 0..batch {
            for t in 0..steps {
                let orow = &mut out[(b * steps + t) * ch_out..(b * steps + t + 1) * ch_out];
                orow.copy_from_slice(&bd);
                for s in 0..width {
                    let xrow = &xd[(b * time + t + s) * ch_in..(b * time + t + s + 1) * ch_in];
                    for (c, &xv) in xrow.iter().enumerate() {
                        if xv == 0.0 {
                            continue;
                        }
                        let krow = &kd[(s * ch_in + c) * ch_out..(s * ch_in + c + 1) * ch_out];
                        for (o, kv) in orow.iter_mut().zip(krow) {
                            *o += xv * kv;
                        }
                    }
                }
            }
        }
    }
    let (px, pk, pb) = (x.clone(), kernels.clone(), bias.clone());
    Ok(Tensor::from_op(
        out,
        vec![batch, steps, ch_out],
        "conv1d",
        vec![x.clone(), kernels.clone(), bias.clone()],
        Box::new(move |g| {
            let (xd, kd) = (px.data(), pk.data());
            let mut dx = px.requires_grad().then(|| vec![0.0; xd.len()]);
            let mut dk = pk.requires_grad().then(|| vec![0.0; kd.len()]);
            let mut db = pb.requires_grad().then(|| vec![0.0; ch_out]);
            for b in 0..batch {
                for t in 0..steps {
                    let grow = &g[(b * steps + t) * ch_out..(b * steps + t + 1) * ch_out];
                    if let Some(db) = db.as_mut() {
                        db.iter_mut().zip(grow).for_each(|(d, gv)| *d += gv);
                    }
                    for s in 0..width {
                        let xbase = (b * time + t + s) * ch_in;
                        for c in 0..ch_in {
                            let kbase = (s * ch_in + c) * ch_out;
                            let krow = &kd[kbase..kbase + ch_out];
                            if let Some(dx) = dx.as_mut() {
                                dx[xbase + c] +=
                                    grow.iter().zip(krow).map(|(a, b)| a * b).sum::<f64>();
                            }
                            if let Some(dk) = dk.as_mut() {
                                let xv = xd[xbase + c];
                                dk[kbase..kbase + ch_out]
                                    .iter_mut()
                                    .zip(grow)
                                    .for_each(|(d, gv)| *d += xv * gv);
                            }
                        }
                    }
                }
            }
            vec![dx, dk, db]
        }),
    ))
}

/// Inverted dropout: survivors are scaled by `1 / (1 - p)`. Identity in
/// [`Mode::Eval`] and when `p == 0`; neither case draws from `rng`.
pub fn dropout(x: &Tensor, p: f64, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
    if !(0.0..1.0).contains(&p) {
        return Err(TensorError::InvalidArgument {
            op: "dropout",
            reason: format!("p must lie in [0, 1), got {p}"),
        });
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok(x.clone());
    }
    let keep_scale = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..x.numel())
        .map(|_| if rng.uniform() >= p { keep_scale } else { 0.0 })
        .collect();
    let data = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
    Ok(Tensor::from_op(
        data,
        x.shape().to_vec(),
        "dropout",
        vec![x.clone()],
        Box::new(move |g| vec![Some(g.iter().zip(&mask).map(|(a, b)| a * b).collect())]),
    ))
}

/// Mean over the time axis: `[batch, time, ch] -> [batch, ch]`.
pub fn global_average_pool(x: &Tensor) -> Result<Tensor> {
    if x.rank() != 3 {
        return Err(TensorError::InvalidArgument {
            op: "global_average_pool",
            reason: format!("expected [batch, time, ch], got {:?}", x.shape()),
        });
    }
    let (batch, time, ch) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let mut out = vec![0.0; batch * ch];
    {
        let xd = x.data();
        for b in 0..batch {
            let orow = &mut out[b * ch..(b + 1) * ch];
            for t in 0..time {
                let xrow = &xd[(b * time + t) * ch..(b * time + t + 1) * ch];
                orow.iter_mut().zip(xrow).for_each(|(o, v)| *o += v);
            }
            orow.iter_mut().for_each(|o| *o /= time as f64);
        }
    }
    Ok(Tensor::from_op(
        out,
        vec![batch, ch],
        "global_average_pool",
        vec![x.clone()],
        Box::new(move |g| {
            let mut dx = vec![0.0; batch * time * ch];
            for b in 0..batch {
                for t in 0..time {
                    for c in 0..ch {
                        dx[(b * time + t) * ch + c] = g[b * ch + c] / time as f64;
                    }
                }
            }
            vec![Some(dx)]
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{backward, sum};

    #[test]
    fn softmax_symmetric_pair() {
        let y = softmax(&Tensor::from_slice(&[0.0, 0.0]), 0).unwrap();
        assert_eq!(y.to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_large_inputs_do_not_overflow() {
        let y = softmax(&Tensor::from_slice(&[1000.0, 1000.0]), 0).unwrap();
        assert_eq!(y.to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_inner_axis() {
        // normalize along axis 0 of a [2, 3]
        let x = Tensor::new(vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0], &[2, 3]).unwrap();
        let y = softmax(&x, 0).unwrap().to_vec();
        assert!(y.iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert!(softmax(&x, 2).is_err());
    }

    #[test]
    fn layer_norm_constant_row_is_zero() {
        let x = Tensor::from_slice(&[3.0, 3.0, 3.0, 3.0]);
        let g = Tensor::from_slice(&[1.0; 4]);
        let b = Tensor::from_slice(&[0.0; 4]);
        let y = layer_norm(&x, &g, &b, 1e-6).unwrap();
        assert!(y.to_vec().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn layer_norm_two_points() {
        let x = Tensor::from_slice(&[1.0, 3.0]);
        let g = Tensor::from_slice(&[1.0, 1.0]);
        let b = Tensor::from_slice(&[0.0, 0.0]);
        let y = layer_norm(&x, &g, &b, 1e-12).unwrap().to_vec();
        assert!((y[0] + 1.0).abs() < 1e-10 && (y[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn layer_norm_rejects_bad_gain() {
        let x = Tensor::zeros(&[2, 3]);
        let g = Tensor::zeros(&[2]);
        let b = Tensor::zeros(&[3]);
        assert!(matches!(
            layer_norm(&x, &g, &b, 1e-6),
            Err(TensorError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn conv_identity_kernel() {
        let x = Tensor::new((0..12).map(f64::from).collect(), &[2, 2, 3]).unwrap();
        let mut k = vec![0.0; 9];
        for c in 0..3 {
            k[c * 3 + c] = 1.0;
        }
        let k = Tensor::new(k, &[1, 3, 3]).unwrap();
        let y = conv1d(&x, &k, &Tensor::zeros(&[3])).unwrap();
        assert_eq!(y.shape(), x.shape());
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn conv_scaling() {
        let x = Tensor::new(vec![1.0, 2.0, 3.0], &[1, 3, 1]).unwrap();
        let k = Tensor::new(vec![2.0], &[1, 1, 1]).unwrap();
        let y = conv1d(&x, &k, &Tensor::zeros(&[1])).unwrap();
        assert_eq!(y.to_vec(), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn conv_wide_kernel_shrinks_time() {
        let x = Tensor::new(vec![1.0, 2.0, 3.0, 4.0], &[1, 4, 1]).unwrap();
        let k = Tensor::new(vec![1.0, 1.0], &[2, 1, 1]).unwrap();
        let y = conv1d(&x, &k, &Tensor::from_slice(&[0.5])).unwrap();
        assert_eq!(y.shape(), &[1, 3, 1]);
        assert_eq!(y.to_vec(), vec![3.5, 5.5, 7.5]);
    }

    #[test]
    fn conv_width_exceeding_time_fails() {
        let x = Tensor::zeros(&[1, 2, 1]);
        let k = Tensor::zeros(&[3, 1, 1]);
        assert!(matches!(
            conv1d(&x, &k, &Tensor::zeros(&[1])),
            Err(TensorError::InvalidArgument { .. })
        ));
    }

    #[test]
    fn dropout_zero_rate_is_identity() {
        let x = Tensor::from_slice(&[1.0, -2.0, 3.5]);
        let mut rng = Rng::new(99);
        let y = dropout(&x, 0.0, Mode::Train, &mut rng).unwrap();
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn dropout_eval_is_identity() {
        let x = Tensor::from_slice(&[1.0, -2.0, 3.5]);
        let mut rng = Rng::new(1);
        let y = dropout(&x, 0.7, Mode::Eval, &mut rng).unwrap();
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn dropout_scales_survivors() {
        let x = Tensor::parameter(vec![1.0; 1000], &[1000]).unwrap();
        let mut rng = Rng::new(5);
        let y = dropout(&x, 0.5, Mode::Train, &mut rng).unwrap();
        let vals = y.to_vec();
        assert!(vals.iter().all(|&v| v == 0.0 || v == 2.0));
        let kept = vals.iter().filter(|&&v| v > 0.0).count();
        assert!((400..600).contains(&kept));
        backward(&sum(&y)).unwrap();
        assert_eq!(x.grad().unwrap(), vals);
        assert!(dropout(&x, 1.0, Mode::Train, &mut rng).is_err());
    }

    #[test]
    fn pooling_constant_rows() {
        let x = Tensor::new([1.5, -2.0].repeat(4), &[1, 4, 2]).unwrap();
        let y = global_average_pool(&x).unwrap();
        assert_eq!(y.shape(), &[1, 2]);
        assert_eq!(y.to_vec(), vec![1.5, -2.0]);
    }
}
