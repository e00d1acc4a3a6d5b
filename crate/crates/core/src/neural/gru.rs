use rand::Rng;

use super::tensor::{mat_vec_t_acc, outer_acc, sigmoid, vec_mat_acc, Tensor};
use super::NeuralError;

/// A GRU cell:
///
/// ```text
/// z  = sigmoid(x Wz + h Uz + bz)
/// r  = sigmoid(x Wr + h Ur + br)
/// n  = tanh(x Wn + (r * h) Un + bn)
/// h' = (1 - z) * h + z * n
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub wz: Tensor,
    pub uz: Tensor,
    pub bz: Tensor,
    pub wr: Tensor,
    pub ur: Tensor,
    pub br: Tensor,
    pub wn: Tensor,
    pub un: Tensor,
    pub bn: Tensor,
}

/// Values kept from the forward pass of one step.
#[derive(Debug, Clone)]
pub struct GruStep {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    pub h: Vec<f64>,
}

impl GruCell {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> GruCell {
        GruCell {
            wz: Tensor::xavier(input, hidden, rng),
            uz: Tensor::xavier(hidden, hidden, rng),
            bz: Tensor::zeros(&[hidden]),
            wr: Tensor::xavier(input, hidden, rng),
            ur: Tensor::xavier(hidden, hidden, rng),
            br: Tensor::zeros(&[hidden]),
            wn: Tensor::xavier(input, hidden, rng),
            un: Tensor::xavier(hidden, hidden, rng),
            bn: Tensor::zeros(&[hidden]),
        }
    }

    pub fn input_size(&self) -> usize {
        self.wz.shape()[0]
    }

    pub fn hidden_size(&self) -> usize {
        self.bz.len()
    }

    pub fn params(&self) -> [&Tensor; 9] {
        [
            &self.wz, &self.uz, &self.bz, &self.wr, &self.ur, &self.br, &self.wn, &self.un, &self.bn,
        ]
    }

    pub fn params_mut(&mut self) -> [&mut Tensor; 9] {
        [
            &mut self.wz,
            &mut self.uz,
            &mut self.bz,
            &mut self.wr,
            &mut self.ur,
            &mut self.br,
            &mut self.wn,
            &mut self.un,
            &mut self.bn,
        ]
    }

    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params().iter().map(|t| t.zeros_like()).collect()
    }

    pub fn step(&self, x: &[f64], h_prev: &[f64]) -> GruStep {
        let hsz = self.hidden_size();
        let mut z = self.bz.data().to_vec();
        vec_mat_acc(x, self.wz.data(), &mut z);
        vec_mat_acc(h_prev, self.uz.data(), &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));

        let mut r = self.br.data().to_vec();
        vec_mat_acc(x, self.wr.data(), &mut r);
        vec_mat_acc(h_prev, self.ur.data(), &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));

        let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let mut n = self.bn.data().to_vec();
        vec_mat_acc(x, self.wn.data(), &mut n);
        vec_mat_acc(&rh, self.un.data(), &mut n);
        n.iter_mut().for_each(|v| *v = v.tanh());

        let h = (0..hsz)
            .map(|j| (1.0 - z[j]) * h_prev[j] + z[j] * n[j])
            .collect();
        GruStep {
            h_prev: h_prev.to_vec(),
            z,
            r,
            n,
            h,
        }
    }

    /// Runs the cell over `xs` from a zero state.
    pub fn run(&self, xs: &[&[f64]]) -> Vec<GruStep> {
        let mut h = vec![0.0; self.hidden_size()];
        let mut steps = Vec::with_capacity(xs.len());
        for x in xs {
            let s = self.step(x, &h);
            h.clone_from(&s.h);
            steps.push(s);
        }
        steps
    }

    /// Backpropagates `dh_out[t]` (gradient on each emitted state) through
    /// the sequence, accumulating into `grads` (same order as `params`).
    /// Returns the gradient with respect to each input.
    pub fn backward(
        &self,
        xs: &[&[f64]],
        steps: &[GruStep],
        dh_out: &[Vec<f64>],
        grads: &mut [Tensor],
    ) -> Vec<Vec<f64>> {
        let hsz = self.hidden_size();
        let mut dxs = vec![vec![0.0; self.input_size()]; xs.len()];
        let mut dh_next = vec![0.0; hsz];
        for t in (0..steps.len()).rev() {
            let s = &steps[t];
            let x = xs[t];
            let dh: Vec<f64> = dh_out[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();

            let mut dh_prev: Vec<f64> = (0..hsz).map(|j| dh[j] * (1.0 - s.z[j])).collect();
            let dan: Vec<f64> = (0..hsz)
                .map(|j| dh[j] * s.z[j] * (1.0 - s.n[j] * s.n[j]))
                .collect();
            let daz: Vec<f64> = (0..hsz)
                .map(|j| dh[j] * (s.n[j] - s.h_prev[j]) * s.z[j] * (1.0 - s.z[j]))
                .collect();

            // candidate
            let rh: Vec<f64> = s.r.iter().zip(&s.h_prev).map(|(a, b)| a * b).collect();
            outer_acc(x, &dan, grads[6].data_mut());
            outer_acc(&rh, &dan, grads[7].data_mut());
            add(grads[8].data_mut(), &dan);
            mat_vec_t_acc(self.wn.data(), &dan, &mut dxs[t]);
            let mut drh = vec![0.0; hsz];
            mat_vec_t_acc(self.un.data(), &dan, &mut drh);
            let dar: Vec<f64> = (0..hsz)
                .map(|j| drh[j] * s.h_prev[j] * s.r[j] * (1.0 - s.r[j]))
                .collect();
            for j in 0..hsz {
                dh_prev[j] += drh[j] * s.r[j];
            }

            // reset gate
            outer_acc(x, &dar, grads[3].data_mut());
            outer_acc(&s.h_prev, &dar, grads[4].data_mut());
            add(grads[5].data_mut(), &dar);
            mat_vec_t_acc(self.wr.data(), &dar, &mut dxs[t]);
            mat_vec_t_acc(self.ur.data(), &dar, &mut dh_prev);

            // update gate
            outer_acc(x, &daz, grads[0].data_mut());
            outer_acc(&s.h_prev, &daz, grads[1].data_mut());
            add(grads[2].data_mut(), &daz);
            mat_vec_t_acc(self.wz.data(), &daz, &mut dxs[t]);
            mat_vec_t_acc(self.uz.data(), &daz, &mut dh_prev);

            dh_next = dh_prev;
        }
        dxs
    }
}

fn add(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Forward and backward GRU cells over the same sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct BiGru {
    pub forward: GruCell,
    pub backward: GruCell,
}

pub struct BiGruCache {
    fwd: Vec<GruStep>,
    /// In reversed time order, as run.
    bwd: Vec<GruStep>,
}

impl BiGru {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> BiGru {
        BiGru {
            forward: GruCell::new(input, hidden, rng),
            backward: GruCell::new(input, hidden, rng),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.forward.hidden_size()
    }

    /// States `[T, 2H]`: row t is the forward state at t followed by the
    /// backward state at t.
    pub fn run(&self, xs: &[&[f64]]) -> Result<(Vec<Vec<f64>>, BiGruCache), NeuralError> {
        if xs.is_empty() {
            return Err(NeuralError::EmptySequence);
        }
        for x in xs {
            if x.len() != self.forward.input_size() {
                return Err(NeuralError::ShapeMismatch {
                    expected: vec![self.forward.input_size()],
                    found: vec![x.len()],
                });
            }
        }
        let fwd = self.forward.run(xs);
        let rev: Vec<&[f64]> = xs.iter().rev().copied().collect();
        let bwd = self.backward.run(&rev);
        let t_len = xs.len();
        let states = (0..t_len)
            .map(|t| {
                let mut s = fwd[t].h.clone();
                s.extend_from_slice(&bwd[t_len - 1 - t].h);
                s
            })
            .collect();
        Ok((states, BiGruCache { fwd, bwd }))
    }

    /// `grads` holds 18 tensors: the forward cell's 9 then the backward's.
    pub fn backward_pass(
        &self,
        xs: &[&[f64]],
        cache: &BiGruCache,
        dstates: &[Vec<f64>],
        grads: &mut [Tensor],
    ) -> Vec<Vec<f64>> {
        let h = self.hidden_size();
        let t_len = xs.len();
        let dfwd: Vec<Vec<f64>> = dstates.iter().map(|d| d[..h].to_vec()).collect();
        let dbwd: Vec<Vec<f64>> = (0..t_len).map(|i| dstates[t_len - 1 - i][h..].to_vec()).collect();
        let (gf, gb) = grads.split_at_mut(9);
        let mut dxs = self.forward.backward(xs, &cache.fwd, &dfwd, gf);
        let rev: Vec<&[f64]> = xs.iter().rev().copied().collect();
        let dxs_rev = self.backward.backward(&rev, &cache.bwd, &dbwd, gb);
        for (i, d) in dxs_rev.into_iter().enumerate() {
            add(&mut dxs[t_len - 1 - i], &d);
        }
        dxs
    }
}
