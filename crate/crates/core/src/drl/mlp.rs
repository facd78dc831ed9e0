use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|x| x.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Identity => {}
        }
    }

    /// Multiplies `grad` by the derivative, given the activation output `y`.
    fn backprop(self, y: &Array2<f64>, grad: &mut Array2<f64>) {
        match self {
            Activation::Relu => grad.zip_mut_with(y, |g, &y| {
                if y <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => grad.zip_mut_with(y, |g, &y| *g *= 1.0 - y * y),
            Activation::Identity => {}
        }
    }
}

/// Dense layer `y = x W + b` with `W` of shape `(in, out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Fully connected network with one hidden activation and one output activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub hidden: Activation,
    pub output: Activation,
}

/// Layer outputs kept from a forward pass; `outs[0]` is the input.
#[derive(Debug, Clone)]
pub struct Cache {
    outs: Vec<Array2<f64>>,
}

impl Cache {
    pub fn output(&self) -> &Array2<f64> {
        self.outs.last().expect("cache holds at least the input")
    }
}

/// Gradients with the same layout as [`Mlp::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub layers: Vec<Dense>,
}

impl Grads {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.w.as_slice().expect("standard layout"), l.b.as_slice().expect("standard layout")])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }
}

impl Mlp {
    /// `sizes = [in, h1, ..., out]`. Hidden layers use uniform `±1/sqrt(fan_in)`;
    /// the output layer uses `±final_scale`.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        final_scale: f64,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let (fan_in, fan_out) = (sizes[i], sizes[i + 1]);
                let scale = if i + 1 == n { final_scale } else { 1.0 / (fan_in as f64).sqrt() };
                let u = Uniform::new_inclusive(-scale, scale).expect("finite bounds");
                Dense {
                    w: Array2::from_shape_simple_fn((fan_in, fan_out), || u.sample(rng)),
                    b: Array1::from_shape_simple_fn(fan_out, || u.sample(rng)),
                }
            })
            .collect();
        Mlp { layers, hidden, output }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").w.ncols()
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(|l| l.w.ncols())).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn activation(&self, i: usize) -> Activation {
        if i + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut h = x.to_owned();
        for (i, l) in self.layers.iter().enumerate() {
            h = h.dot(&l.w) + &l.b;
            self.activation(i).apply(&mut h);
        }
        h
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Cache {
        let mut outs = Vec::with_capacity(self.layers.len() + 1);
        outs.push(x.to_owned());
        for (i, l) in self.layers.iter().enumerate() {
            let mut h = outs[i].dot(&l.w) + &l.b;
            self.activation(i).apply(&mut h);
            outs.push(h);
        }
        Cache { outs }
    }

    /// Gradients of `sum(grad_out * output)` with respect to the parameters and the input.
    pub fn backward(&self, cache: &Cache, grad_out: &Array2<f64>) -> (Grads, Array2<f64>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            self.activation(i).backprop(&cache.outs[i + 1], &mut g);
            let gw = cache.outs[i].t().dot(&g).as_standard_layout().into_owned();
            let gb = g.sum_axis(Axis(0));
            let next = g.dot(&self.layers[i].w.t());
            grads.push(Dense { w: gw, b: gb });
            g = next;
        }
        grads.reverse();
        (Grads { layers: grads }, g)
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.w.as_slice().expect("standard layout"), l.b.as_slice().expect("standard layout")])
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [l.w.as_slice_mut().expect("standard layout"), l.b.as_slice_mut().expect("standard layout")]
            })
            .collect()
    }

    /// `self <- tau * src + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, src: &Mlp, tau: f64) {
        for (dst, s) in self.param_slices_mut().into_iter().zip(src.param_slices()) {
            for (d, &x) in dst.iter_mut().zip(s) {
                *d = tau * x + (1.0 - tau) * *d;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }
}
