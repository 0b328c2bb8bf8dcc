use super::{numel, Result, Tensor, TensorError};

/// Numpy-style broadcast of two shapes.
pub(crate) fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i < rank - a.len() {
            1
        } else {
            a[i - (rank - a.len())]
        };
        let db = if i < rank - b.len() {
            1
        } else {
            b[i - (rank - b.len())]
        };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return None,
        };
    }
    Some(out)
}

/// For every flat index of `out`, the flat index of the element of `src`
/// that broadcasts onto it. `src` must broadcast to `out`.
pub(crate) fn broadcast_map(src: &[usize], out: &[usize]) -> Vec<usize> {
    let rank = out.len();
    let offset = rank - src.len();
    // src strides aligned to out's axes; zero on broadcast axes
    let mut strides = vec![0usize; rank];
    let mut acc = 1;
    for i in (0..src.len()).rev() {
        if src[i] != 1 {
            strides[i + offset] = acc;
        }
        acc *= src[i];
    }
    let total = numel(out);
    let mut map = Vec::with_capacity(total);
    let mut index = vec![0usize; rank];
    let mut pos = 0usize;
    for _ in 0..total {
        map.push(pos);
        for axis in (0..rank).rev() {
            index[axis] += 1;
            pos += strides[axis];
            if index[axis] < out[axis] {
                break;
            }
            pos -= strides[axis] * out[axis];
            index[axis] = 0;
        }
    }
    map
}

fn binary(
    op: &'static str,
    a: &Tensor,
    b: &Tensor,
    forward: fn(f64, f64) -> f64,
    // (x, y, upstream) -> (∂/∂x, ∂/∂y)
    local: fn(f64, f64, f64) -> (f64, f64),
) -> Result<Tensor> {
    let shape = broadcast_shape(a.shape(), b.shape()).ok_or_else(|| TensorError::Broadcast {
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    })?;
    let a_map = (a.shape() != shape.as_slice()).then(|| broadcast_map(a.shape(), &shape));
    let b_map = (b.shape() != shape.as_slice()).then(|| broadcast_map(b.shape(), &shape));
    let n = numel(&shape);
    let data = {
        let (ad, bd) = (a.data(), b.data());
        (0..n)
            .map(|i| {
                let ia = a_map.as_ref().map_or(i, |m| m[i]);
                let ib = b_map.as_ref().map_or(i, |m| m[i]);
                forward(ad[ia], bd[ib])
            })
            .collect()
    };
    let (pa, pb) = (a.clone(), b.clone());
    Ok(Tensor::from_op(
        data,
        shape,
        op,
        vec![a.clone(), b.clone()],
        Box::new(move |g| {
            let (ad, bd) = (pa.data(), pb.data());
            let mut ga = pa.requires_grad().then(|| vec![0.0; ad.len()]);
            let mut gb = pb.requires_grad().then(|| vec![0.0; bd.len()]);
            for (i, &gi) in g.iter().enumerate() {
                let ia = a_map.as_ref().map_or(i, |m| m[i]);
                let ib = b_map.as_ref().map_or(i, |m| m[i]);
                let (da, db) = local(ad[ia], bd[ib], gi);
                if let Some(ga) = ga.as_mut() {
                    ga[ia] += da;
                }
                if let Some(gb) = gb.as_mut() {
                    gb[ib] += db;
                }
            }
            vec![ga, gb]
        }),
    ))
}

pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    binary("add", a, b, |x, y| x + y, |_, _, g| (g, g))
}

pub fn sub(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    binary("sub", a, b, |x, y| x - y, |_, _, g| (g, -g))
}

pub fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    binary("mul", a, b, |x, y| x * y, |x, y, g| (g * y, g * x))
}

pub fn scale(x: &Tensor, factor: f64) -> Tensor {
    let data = x.data().iter().map(|v| v * factor).collect();
    Tensor::from_op(
        data,
        x.shape().to_vec(),
        "scale",
        vec![x.clone()],
        Box::new(move |g| vec![Some(g.iter().map(|v| v * factor).collect())]),
    )
}

pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.max(0.0)).collect();
    let px = x.clone();
    Tensor::from_op(
        data,
        x.shape().to_vec(),
        "relu",
        vec![x.clone()],
        Box::new(move |g| {
            let xd = px.data();
            vec![Some(
                g.iter()
                    .zip(xd.iter())
                    .map(|(g, &v)| if v > 0.0 { *g } else { 0.0 })
                    .collect(),
            )]
        }),
    )
}

/// Sum of all elements, as a rank-0 tensor.
pub fn sum(x: &Tensor) -> Tensor {
    let total = x.data().iter().sum();
    let n = x.numel();
    Tensor::from_op(
        vec![total],
        Vec::new(),
        "sum",
        vec![x.clone()],
        Box::new(move |g| vec![Some(vec![g[0]; n])]),
    )
}

/// Mean of all elements, as a rank-0 tensor.
pub fn mean(x: &Tensor) -> Tensor {
    let n = x.numel();
    let total: f64 = x.data().iter().sum();
    Tensor::from_op(
        vec![total / n as f64],
        Vec::new(),
        "mean",
        vec![x.clone()],
        Box::new(move |g| vec![Some(vec![g[0] / n as f64; n])]),
    )
}

pub fn reshape(x: &Tensor, shape: &[usize]) -> Result<Tensor> {
    if shape.contains(&0) || numel(shape) != x.numel() {
        return Err(TensorError::ShapeMismatch {
            op: "reshape",
            lhs: x.shape().to_vec(),
            rhs: shape.to_vec(),
        });
    }
    Ok(Tensor::from_op(
        x.to_vec(),
        shape.to_vec(),
        "reshape",
        vec![x.clone()],
        Box::new(|g| vec![Some(g.to_vec())]),
    ))
}

fn swap_last_two(data: &[f64], batch: usize, rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for b in 0..batch {
        let base = b * rows * cols;
        for i in 0..rows {
            for j in 0..cols {
                out[base + j * rows + i] = data[base + i * cols + j];
            }
        }
    }
    out
}

/// Swaps the last two axes.
pub fn transpose(x: &Tensor) -> Result<Tensor> {
    let rank = x.rank();
    if rank < 2 {
        return Err(TensorError::InvalidAxis { axis: 1, rank });
    }
    let (rows, cols) = (x.shape()[rank - 2], x.shape()[rank - 1]);
    let batch = x.numel() / (rows * cols);
    let mut shape = x.shape().to_vec();
    shape.swap(rank - 2, rank - 1);
    let data = swap_last_two(&x.data(), batch, rows, cols);
    Ok(Tensor::from_op(
        data,
        shape,
        "transpose",
        vec![x.clone()],
        Box::new(move |g| vec![Some(swap_last_two(g, batch, cols, rows))]),
    ))
}

// c[m×n] += a[m×k] · b[k×n]
fn gemm_nn(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
    }
}

// c[m×k] += g[m×n] · b[k×n]ᵀ
fn gemm_nt(g: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let brow = &b[p * n..(p + 1) * n];
            c[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
        }
    }
}

// c[k×n] += a[m×k]ᵀ · g[m×n]
fn gemm_tn(a: &[f64], g: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let crow = &mut c[p * n..(p + 1) * n];
            for (cv, gv) in crow.iter_mut().zip(grow) {
                *cv += av * gv;
            }
        }
    }
}

/// Batched matrix product `[.., m, k] · [.., k, n] -> [.., m, n]` with
/// broadcasting over the leading (batch) axes.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let mismatch = || TensorError::ShapeMismatch {
        op: "matmul",
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    };
    if a.rank() < 2 || b.rank() < 2 {
        return Err(mismatch());
    }
    let (ra, rb) = (a.rank(), b.rank());
    let (m, k) = (a.shape()[ra - 2], a.shape()[ra - 1]);
    let (k2, n) = (b.shape()[rb - 2], b.shape()[rb - 1]);
    if k != k2 {
        return Err(mismatch());
    }
    let a_batch = &a.shape()[..ra - 2];
    let b_batch = &b.shape()[..rb - 2];
    let batch_shape = broadcast_shape(a_batch, b_batch).ok_or_else(mismatch)?;
    let batches = numel(&batch_shape);
    let a_idx = broadcast_map(a_batch, &batch_shape);
    let b_idx = broadcast_map(b_batch, &batch_shape);

    let mut data = vec![0.0; batches * m * n];
    {
        let (ad, bd) = (a.data(), b.data());
        for t in 0..batches {
            gemm_nn(
                &ad[a_idx[t] * m * k..(a_idx[t] + 1) * m * k],
                &bd[b_idx[t] * k * n..(b_idx[t] + 1) * k * n],
                &mut data[t * m * n..(t + 1) * m * n],
                m,
                k,
                n,
            );
        }
    }
    let mut shape = batch_shape;
    shape.extend([m, n]);
    let (pa, pb) = (a.clone(), b.clone());
    Ok(Tensor::from_op(
        data,
        shape,
        "matmul",
        vec![a.clone(), b.clone()],
        Box::new(move |g| {
            let (ad, bd) = (pa.data(), pb.data());
            let mut ga = pa.requires_grad().then(|| vec![0.0; ad.len()]);
            let mut gb = pb.requires_grad().then(|| vec![0.0; bd.len()]);
            for t in 0..batches {
                let gt = &g[t * m * n..(t + 1) * m * n];
                let (sa, sb) = (a_idx[t] * m * k, b_idx[t] * k * n);
                if let Some(ga) = ga.as_mut() {
                    gemm_nt(gt, &bd[sb..sb + k * n], &mut ga[sa..sa + m * k], m, k, n);
                }
                if let Some(gb) = gb.as_mut() {
                    gemm_tn(&ad[sa..sa + m * k], gt, &mut gb[sb..sb + k * n], m, k, n);
                }
            }
            vec![ga, gb]
        }),
    ))
}
