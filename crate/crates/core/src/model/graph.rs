//! The network is written once against [`Exec`]; [`Eval`] runs it directly
//! and [`Tape`] records every operation for reverse-mode differentiation.

use super::tensor::{conv2d_backward, conv2d_forward, pixel_shuffle, pixel_unshuffle, ConvShape, Tensor};
use crate::scalar::Real;

/// Named parameter array.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

/// A convolution whose weight and bias live at the given parameter indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvLayer {
    pub shape: ConvShape,
    pub weight: usize,
    pub bias: usize,
}

pub trait Exec<T: Real> {
    type V;
    fn conv(&mut self, x: &Self::V, layer: &ConvLayer) -> Self::V;
    fn relu(&mut self, x: &Self::V) -> Self::V;
    fn add(&mut self, a: &Self::V, b: &Self::V) -> Self::V;
    /// Per-channel spatial mean, `c×1×1`.
    fn avg_pool(&mut self, x: &Self::V) -> Self::V;
    fn sigmoid(&mut self, x: &Self::V) -> Self::V;
    /// Multiplies each channel of `x` by the matching entry of a `c×1×1` gate.
    fn scale(&mut self, x: &Self::V, gate: &Self::V) -> Self::V;
    fn shuffle(&mut self, x: &Self::V, r: usize) -> Self::V;
}

fn conv_eval<T: Real>(params: &[Param<T>], x: &Tensor<T>, l: &ConvLayer) -> (Tensor<T>, Vec<T>) {
    conv2d_forward(x, &params[l.weight].data, &params[l.bias].data, &l.shape)
}

fn relu_eval<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    Tensor {
        data: x.data.iter().map(|&v| v.max(T::zero())).collect(),
        ..*x
    }
}

fn add_eval<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    assert!(a.same_shape(b), "add shape mismatch");
    Tensor {
        data: a.data.iter().zip(&b.data).map(|(&p, &q)| p + q).collect(),
        ..*a
    }
}

fn pool_eval<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let n = T::lit(x.plane() as f64);
    Tensor {
        channels: x.channels,
        height: 1,
        width: 1,
        data: x.data.chunks(x.plane()).map(|c| c.iter().copied().sum::<T>() / n).collect(),
    }
}

fn sigmoid_eval<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    Tensor {
        data: x.data.iter().map(|&v| T::one() / (T::one() + (-v).exp())).collect(),
        ..*x
    }
}

fn scale_eval<T: Real>(x: &Tensor<T>, g: &Tensor<T>) -> Tensor<T> {
    assert_eq!(g.data.len(), x.channels, "gate size");
    let mut data = x.data.clone();
    for (chunk, &s) in data.chunks_mut(x.plane()).zip(&g.data) {
        for v in chunk {
            *v = *v * s;
        }
    }
    Tensor { data, ..*x }
}

/// Direct evaluation holding only live activations.
pub struct Eval<'a, T> {
    params: &'a [Param<T>],
}

impl<'a, T> Eval<'a, T> {
    pub fn new(params: &'a [Param<T>]) -> Self {
        Self { params }
    }
}

impl<T: Real> Exec<T> for Eval<'_, T> {
    type V = Tensor<T>;

    fn conv(&mut self, x: &Tensor<T>, layer: &ConvLayer) -> Tensor<T> {
        conv_eval(self.params, x, layer).0
    }

    fn relu(&mut self, x: &Tensor<T>) -> Tensor<T> {
        relu_eval(x)
    }

    fn add(&mut self, a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
        add_eval(a, b)
    }

    fn avg_pool(&mut self, x: &Tensor<T>) -> Tensor<T> {
        pool_eval(x)
    }

    fn sigmoid(&mut self, x: &Tensor<T>) -> Tensor<T> {
        sigmoid_eval(x)
    }

    fn scale(&mut self, x: &Tensor<T>, gate: &Tensor<T>) -> Tensor<T> {
        scale_eval(x, gate)
    }

    fn shuffle(&mut self, x: &Tensor<T>, r: usize) -> Tensor<T> {
        pixel_shuffle(x, r).expect("upsampler channel count")
    }
}

enum Op<T> {
    Input,
    Conv { x: usize, layer: ConvLayer, cols: Vec<T> },
    Relu { x: usize },
    Add { a: usize, b: usize },
    Pool { x: usize },
    Sigmoid { x: usize },
    Scale { x: usize, gate: usize },
    Shuffle { x: usize, r: usize },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Recording executor; node handles are indices into the tape.
pub struct Tape<'a, T> {
    params: &'a [Param<T>],
    nodes: Vec<Node<T>>,
}

impl<'a, T: Real> Tape<'a, T> {
    pub fn new(params: &'a [Param<T>]) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn input(&mut self, x: Tensor<T>) -> usize {
        self.push(x, Op::Input)
    }

    pub fn value(&self, id: usize) -> &Tensor<T> {
        &self.nodes[id].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> usize {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    /// Backpropagates `grad` (shaped like node `out`) and returns one
    /// gradient array per parameter.
    pub fn backward(self, out: usize, grad: Vec<T>) -> Vec<Vec<T>> {
        assert_eq!(grad.len(), self.nodes[out].value.data.len(), "output gradient size");
        let mut pgrads: Vec<Vec<T>> = self.params.iter().map(|p| vec![T::zero(); p.data.len()]).collect();
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out] = Some(grad);
        let accumulate = |grads: &mut Vec<Option<Vec<T>>>, id: usize, g: Vec<T>| match &mut grads[id] {
            Some(acc) => {
                for (a, b) in acc.iter_mut().zip(g) {
                    *a = *a + b;
                }
            }
            slot @ None => *slot = Some(g),
        };
        for id in (0..=out).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            match &node.op {
                Op::Input => {}
                Op::Conv { x, layer, cols } => {
                    let xin = &self.nodes[*x].value;
                    let (w, b) = (layer.weight, layer.bias);
                    let (gw, gb) = if w < b {
                        let (lo, hi) = pgrads.split_at_mut(b);
                        (&mut lo[w], &mut hi[0])
                    } else {
                        let (lo, hi) = pgrads.split_at_mut(w);
                        (&mut hi[0], &mut lo[b])
                    };
                    let dx = conv2d_backward(
                        &g,
                        cols,
                        &self.params[w].data,
                        &layer.shape,
                        xin.height,
                        xin.width,
                        gw,
                        gb,
                    );
                    accumulate(&mut grads, *x, dx);
                }
                Op::Relu { x } => {
                    let dx = g
                        .iter()
                        .zip(&node.value.data)
                        .map(|(&gi, &o)| if o > T::zero() { gi } else { T::zero() })
                        .collect();
                    accumulate(&mut grads, *x, dx);
                }
                Op::Add { a, b } => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::Pool { x } => {
                    let xin = &self.nodes[*x].value;
                    let n = T::lit(xin.plane() as f64);
                    let mut dx = Vec::with_capacity(xin.data.len());
                    for &gc in &g {
                        dx.extend(std::iter::repeat(gc / n).take(xin.plane()));
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Sigmoid { x } => {
                    let dx = g
                        .iter()
                        .zip(&node.value.data)
                        .map(|(&gi, &s)| gi * s * (T::one() - s))
                        .collect();
                    accumulate(&mut grads, *x, dx);
                }
                Op::Scale { x, gate } => {
                    let xin = &self.nodes[*x].value;
                    let gv = &self.nodes[*gate].value.data;
                    let plane = xin.plane();
                    let mut dx = g.clone();
                    let mut dgate = vec![T::zero(); gv.len()];
                    for c in 0..xin.channels {
                        let gs = &mut dx[c * plane..(c + 1) * plane];
                        let xs = &xin.data[c * plane..(c + 1) * plane];
                        let mut acc = T::zero();
                        for (d, &xv) in gs.iter_mut().zip(xs) {
                            acc = acc + *d * xv;
                            *d = *d * gv[c];
                        }
                        dgate[c] = acc;
                    }
                    accumulate(&mut grads, *x, dx);
                    accumulate(&mut grads, *gate, dgate);
                }
                Op::Shuffle { x, r } => {
                    let t = Tensor { data: g, ..node.value };
                    let dx = pixel_unshuffle(&t, *r).expect("shuffle shape").data;
                    accumulate(&mut grads, *x, dx);
                }
            }
        }
        pgrads
    }
}

impl<T: Real> Exec<T> for Tape<'_, T> {
    type V = usize;

    fn conv(&mut self, x: &usize, layer: &ConvLayer) -> usize {
        let (value, cols) = conv_eval(self.params, &self.nodes[*x].value, layer);
        self.push(
            value,
            Op::Conv {
                x: *x,
                layer: *layer,
                cols,
            },
        )
    }

    fn relu(&mut self, x: &usize) -> usize {
        let v = relu_eval(&self.nodes[*x].value);
        self.push(v, Op::Relu { x: *x })
    }

    fn add(&mut self, a: &usize, b: &usize) -> usize {
        let v = add_eval(&self.nodes[*a].value, &self.nodes[*b].value);
        self.push(v, Op::Add { a: *a, b: *b })
    }

    fn avg_pool(&mut self, x: &usize) -> usize {
        let v = pool_eval(&self.nodes[*x].value);
        self.push(v, Op::Pool { x: *x })
    }

    fn sigmoid(&mut self, x: &usize) -> usize {
        let v = sigmoid_eval(&self.nodes[*x].value);
        self.push(v, Op::Sigmoid { x: *x })
    }

    fn scale(&mut self, x: &usize, gate: &usize) -> usize {
        let v = scale_eval(&self.nodes[*x].value, &self.nodes[*gate].value);
        self.push(v, Op::Scale { x: *x, gate: *gate })
    }

    fn shuffle(&mut self, x: &usize, r: usize) -> usize {
        let v = pixel_shuffle(&self.nodes[*x].value, r).expect("upsampler channel count");
        self.push(v, Op::Shuffle { x: *x, r })
    }
}
