use rand::distributions::{Distribution, Uniform};
use rayon::prelude::*;

use super::config::{ModelConfig, Scheme, Task, KERNEL};
use super::graph::{ConvLayer, Eval, Exec, Param, Tape};
use super::tensor::{ConvShape, Tensor};
use crate::error::{Error, Result};
use crate::imgcore::Image2D;
use crate::rng;
use crate::scalar::Real;

/// Residual channel-attention block.
#[derive(Clone, Debug)]
struct Rcab {
    conv1: ConvLayer,
    conv2: ConvLayer,
    ca_down: ConvLayer,
    ca_up: ConvLayer,
}

#[derive(Clone, Debug)]
struct Group {
    blocks: Vec<Rcab>,
    tail: ConvLayer,
}

#[derive(Clone, Debug)]
struct Stage {
    groups: Vec<Group>,
    tail: ConvLayer,
    up: Option<ConvLayer>,
}

#[derive(Clone, Debug)]
struct Arch {
    head: ConvLayer,
    down: Option<ConvLayer>,
    stages: Vec<Stage>,
    post_up: Vec<ConvLayer>,
    recon: ConvLayer,
}

/// Parameter names and shapes, in registration order.
struct Builder {
    specs: Vec<(String, Vec<usize>, usize)>,
}

impl Builder {
    fn conv(&mut self, name: &str, c_in: usize, c_out: usize, kernel: usize, stride: usize) -> ConvLayer {
        let shape = ConvShape {
            c_in,
            c_out,
            kernel,
            stride,
            pad: kernel / 2,
        };
        let fan_in = c_in * kernel * kernel;
        self.specs
            .push((format!("{name}.weight"), vec![c_out, c_in, kernel, kernel], fan_in));
        self.specs.push((format!("{name}.bias"), vec![c_out], fan_in));
        ConvLayer {
            shape,
            weight: self.specs.len() - 2,
            bias: self.specs.len() - 1,
        }
    }

    fn upsampler(&mut self, name: &str, feats: usize) -> ConvLayer {
        self.conv(name, feats, 4 * feats, KERNEL, 1)
    }
}

fn build_arch(cfg: &ModelConfig) -> (Arch, Vec<(String, Vec<usize>, usize)>) {
    let f = cfg.n_feats;
    let mut b = Builder { specs: Vec::new() };
    let head = b.conv("head", 1, f, KERNEL, 1);
    let down = (cfg.task == Task::Mar).then(|| b.conv("down", f, f, KERNEL, 2));
    let progressive = cfg.task == Task::Sr && cfg.scheme == Scheme::Progressive;
    let mut stages = Vec::new();
    for s in 0..cfg.n_stages() {
        let mut groups = Vec::new();
        for g in 0..cfg.n_rg_per_stage {
            let mut blocks = Vec::new();
            for k in 0..cfg.n_rcab {
                let p = format!("s{s}.rg{g}.rcab{k}");
                blocks.push(Rcab {
                    conv1: b.conv(&format!("{p}.conv1"), f, f, KERNEL, 1),
                    conv2: b.conv(&format!("{p}.conv2"), f, f, KERNEL, 1),
                    ca_down: b.conv(&format!("{p}.ca_down"), f, f / cfg.reduction, 1, 1),
                    ca_up: b.conv(&format!("{p}.ca_up"), f / cfg.reduction, f, 1, 1),
                });
            }
            let tail = b.conv(&format!("s{s}.rg{g}.tail"), f, f, KERNEL, 1);
            groups.push(Group { blocks, tail });
        }
        let tail = b.conv(&format!("s{s}.tail"), f, f, KERNEL, 1);
        let up = progressive.then(|| b.upsampler(&format!("s{s}.up"), f));
        stages.push(Stage { groups, tail, up });
    }
    let post_up = if progressive {
        Vec::new()
    } else {
        (0..cfg.n_upsamplers()).map(|u| b.upsampler(&format!("up{u}"), f)).collect()
    };
    let recon = b.conv("recon", f, 1, KERNEL, 1);
    (
        Arch {
            head,
            down,
            stages,
            post_up,
            recon,
        },
        b.specs,
    )
}

/// Configured network with its parameters.
#[derive(Clone, Debug)]
pub struct Model<T> {
    config: ModelConfig,
    params: Vec<Param<T>>,
    arch: Arch,
}

/// Seeded fan-in-scaled uniform initialization, U(±1/√fan_in) per array.
pub fn build_model<T: Real>(cfg: &ModelConfig, init_seed: u64) -> Result<Model<T>> {
    cfg.validate()?;
    let (arch, specs) = build_arch(cfg);
    let params = specs
        .into_iter()
        .map(|(name, shape, fan_in)| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            let mut r = rng::stream(init_seed, &[rng::label(&name)]);
            let n = shape.iter().product();
            let data = (0..n).map(|_| T::lit(dist.sample(&mut r))).collect();
            Param { name, shape, data }
        })
        .collect();
    Ok(Model {
        config: cfg.clone(),
        params,
        arch,
    })
}

impl<T: Real> Model<T> {
    /// Rebuilds a model from stored parameters, checking names and shapes.
    pub fn from_params(cfg: &ModelConfig, params: Vec<Param<T>>) -> Result<Self> {
        cfg.validate()?;
        let (arch, specs) = build_arch(cfg);
        if specs.len() != params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter arrays, found {}",
                specs.len(),
                params.len()
            )));
        }
        for ((name, shape, _), p) in specs.iter().zip(&params) {
            if *name != p.name || *shape != p.shape || p.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Checkpoint(format!(
                    "parameter {:?} {:?} does not match expected {name:?} {shape:?}",
                    p.name, p.shape
                )));
            }
        }
        Ok(Self {
            config: cfg.clone(),
            params,
            arch,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    /// Number of ×2 upsampler convolutions and the stage each follows
    /// (`None` for tail upsamplers).
    pub fn upsampler_positions(&self) -> Vec<Option<usize>> {
        let mut out: Vec<Option<usize>> = self
            .arch
            .stages
            .iter()
            .enumerate()
            .filter(|(_, s)| s.up.is_some())
            .map(|(i, _)| Some(i))
            .collect();
        out.extend(self.arch.post_up.iter().map(|_| None));
        out
    }

    /// Zeroes the reconstruction conv so the network outputs exactly zero
    /// (or the input, with the bypass).
    pub fn zero_reconstruction(&mut self) {
        for id in [self.arch.recon.weight, self.arch.recon.bias] {
            self.params[id].data.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            config: self.config.clone(),
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    data: p.data.iter().map(|v| U::lit(v.as_f64())).collect(),
                })
                .collect(),
            arch: self.arch.clone(),
        }
    }

    fn check_input(&self, img: &Image2D<T>) -> Result<(usize, usize)> {
        if img.is_empty() {
            return Err(Error::Dimension("empty model input".into()));
        }
        self.config.output_dims(img.height(), img.width())
    }

    pub(crate) fn run<E: Exec<T>>(&self, e: &mut E, x: E::V) -> E::V
    where
        E::V: Clone,
    {
        let a = &self.arch;
        let mut f = e.conv(&x, &a.head);
        if let Some(d) = &a.down {
            f = e.conv(&f, d);
        }
        for stage in &a.stages {
            let stage_in = f.clone();
            let mut h = f;
            for group in &stage.groups {
                let group_in = h.clone();
                for block in &group.blocks {
                    let y = e.conv(&h, &block.conv1);
                    let y = e.relu(&y);
                    let y = e.conv(&y, &block.conv2);
                    let p = e.avg_pool(&y);
                    let z = e.conv(&p, &block.ca_down);
                    let z = e.relu(&z);
                    let z = e.conv(&z, &block.ca_up);
                    let gate = e.sigmoid(&z);
                    let y = e.scale(&y, &gate);
                    h = e.add(&y, &h);
                }
                h = e.conv(&h, &group.tail);
                h = e.add(&h, &group_in);
            }
            h = e.conv(&h, &stage.tail);
            if self.config.rir_skip {
                h = e.add(&h, &stage_in);
            }
            if let Some(up) = &stage.up {
                h = e.conv(&h, up);
                h = e.shuffle(&h, 2);
            }
            f = h;
        }
        for up in &a.post_up {
            f = e.conv(&f, up);
            f = e.shuffle(&f, 2);
        }
        let out = e.conv(&f, &a.recon);
        if self.config.input_bypass {
            e.add(&out, &x)
        } else {
            out
        }
    }

    /// Restores one image; the output is not clamped.
    pub fn forward(&self, img: &Image2D<T>) -> Result<Image2D<T>> {
        self.check_input(img)?;
        let mut e = Eval::new(&self.params);
        self.run(&mut e, Tensor::from_image(img)).into_image()
    }

    /// [`Self::forward`] over a batch, in parallel, preserving order.
    pub fn forward_batch(&self, batch: &[Image2D<T>]) -> Result<Vec<Image2D<T>>> {
        batch.par_iter().map(|img| self.forward(img)).collect()
    }

    /// Runs the network on `img`, hands the output to `loss`, which returns
    /// a value and d loss / d output, and backpropagates to every parameter.
    pub fn backprop<R>(
        &self,
        img: &Image2D<T>,
        loss: impl FnOnce(&Image2D<T>) -> Result<(R, Image2D<T>)>,
    ) -> Result<(R, Vec<Vec<T>>)> {
        self.check_input(img)?;
        let mut tape = Tape::new(&self.params);
        let x = tape.input(Tensor::from_image(img));
        let out = self.run(&mut tape, x);
        let out_img = tape.value(out).clone().into_image()?;
        let (value, grad) = loss(&out_img)?;
        grad.ensure_same_dims(&out_img)?;
        Ok((value, tape.backward(out, grad.into_data())))
    }
}
