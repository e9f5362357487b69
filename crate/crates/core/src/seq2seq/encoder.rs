//! Stacked bidirectional encoder, linear stepwise decoder, and the
//! reconstruction loss.

use ndarray::{s, Array1, Array2, Array3, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::cell::{cell_backward, cell_forward, final_state, CellCache, CellParams};
use super::Seq2SeqError;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub layers: usize,
    pub hidden_size: usize,
    /// Keep probability for inverted dropout on layer outputs (train only).
    pub dropout_keep: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden_size: 512,
            dropout_keep: 0.8,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), Seq2SeqError> {
        if self.layers < 1 || self.hidden_size < 1 {
            return Err(Seq2SeqError::InvalidConfig(
                "layers and hidden_size must be at least 1".into(),
            ));
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return Err(Seq2SeqError::InvalidConfig(
                "dropout_keep must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Width of the concatenated bidirectional output of any layer.
    pub fn output_width(&self) -> usize {
        2 * self.hidden_size
    }

    /// Length of the flattened final encoder state.
    pub fn state_len(&self) -> usize {
        self.layers * 2 * 2 * self.hidden_size
    }
}

/// One bidirectional layer: independent cells for each direction.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BiLayerParams {
    pub fwd: CellParams,
    pub bwd: CellParams,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DecoderParams {
    /// (9, encoder output width)
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Seq2SeqParams {
    pub layers: Vec<BiLayerParams>,
    pub decoder: DecoderParams,
}

impl Seq2SeqParams {
    pub fn zeros(config: &EncoderConfig, input_size: usize) -> Self {
        let h = config.hidden_size;
        let layers = (0..config.layers)
            .map(|l| {
                let in_size = if l == 0 { input_size } else { 2 * h };
                BiLayerParams {
                    fwd: CellParams::zeros(in_size, h),
                    bwd: CellParams::zeros(in_size, h),
                }
            })
            .collect();
        Self {
            layers,
            decoder: DecoderParams {
                w: Array2::zeros((input_size, 2 * h)),
                b: Array1::zeros(input_size),
            },
        }
    }

    /// Seeded uniform initialization in [-0.08, 0.08].
    pub fn init_uniform(config: &EncoderConfig, input_size: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut params = Self::zeros(config, input_size);
        for slice in params.slices_mut() {
            for v in slice {
                *v = rng.gen_range(-0.08..0.08);
            }
        }
        params
    }

    /// All parameter arrays as flat slices in a fixed canonical order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for cell in [&layer.fwd, &layer.bwd] {
                out.push(cell.w_x.as_slice().unwrap());
                out.push(cell.w_h.as_slice().unwrap());
                out.push(cell.b.as_slice().unwrap());
                out.push(cell.p_i.as_slice().unwrap());
                out.push(cell.p_f.as_slice().unwrap());
                out.push(cell.p_o.as_slice().unwrap());
            }
        }
        out.push(self.decoder.w.as_slice().unwrap());
        out.push(self.decoder.b.as_slice().unwrap());
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            for cell in [&mut layer.fwd, &mut layer.bwd] {
                out.push(cell.w_x.as_slice_mut().unwrap());
                out.push(cell.w_h.as_slice_mut().unwrap());
                out.push(cell.b.as_slice_mut().unwrap());
                out.push(cell.p_i.as_slice_mut().unwrap());
                out.push(cell.p_f.as_slice_mut().unwrap());
                out.push(cell.p_o.as_slice_mut().unwrap());
            }
        }
        out.push(self.decoder.w.as_slice_mut().unwrap());
        out.push(self.decoder.b.as_slice_mut().unwrap());
        out
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().into_iter().flatten().copied().collect()
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for slice in self.slices_mut() {
            slice.copy_from_slice(&flat[offset..offset + slice.len()]);
            offset += slice.len();
        }
        assert_eq!(offset, flat.len(), "flat parameter length mismatch");
    }

    pub fn param_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Final hidden and cell vectors of every layer and direction.
#[derive(Debug, Clone)]
pub struct EncoderState {
    /// Per layer: (h_fwd, c_fwd, h_bwd, c_bwd), each (B, H).
    pub layers: Vec<[Array2<f64>; 4]>,
}

impl EncoderState {
    /// Canonical flattening S_{L-1}: layer-major, then direction
    /// (forward, backward), then hidden before cell. Shape (B, len).
    pub fn flatten(&self) -> Array2<f64> {
        let batch = self.layers[0][0].nrows();
        let hidden = self.layers[0][0].ncols();
        let len = self.layers.len() * 4 * hidden;
        let mut out = Array2::zeros((batch, len));
        let mut col = 0;
        for layer in &self.layers {
            for part in layer {
                out.slice_mut(s![.., col..col + hidden]).assign(part);
                col += hidden;
            }
        }
        out
    }
}

pub(crate) struct ForwardCache {
    /// Input sequence seen by each layer (after dropout of the layer below).
    pub layer_inputs: Vec<Array3<f64>>,
    pub cells: Vec<(CellCache, CellCache)>,
    /// Inverted-dropout masks applied to each layer's output (train mode).
    pub masks: Vec<Option<Array3<f64>>>,
    /// Top-layer outputs after dropout, (T, B, 2H).
    pub outputs: Array3<f64>,
}

fn concat_outputs(fwd: &CellCache, bwd: &CellCache) -> Array3<f64> {
    let (t_len, batch, hidden) = fwd.h.dim();
    let mut out = Array3::zeros((t_len, batch, 2 * hidden));
    out.slice_mut(s![.., .., ..hidden]).assign(&fwd.h);
    out.slice_mut(s![.., .., hidden..]).assign(&bwd.h);
    out
}

pub(crate) fn encoder_forward(
    x: &Array3<f64>,
    params: &Seq2SeqParams,
    config: &EncoderConfig,
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(ForwardCache, EncoderState), Seq2SeqError> {
    config.validate()?;
    if params.layers.len() != config.layers {
        return Err(Seq2SeqError::InvalidConfig(
            "parameter layer count does not match config".into(),
        ));
    }

    let mut layer_inputs = Vec::with_capacity(config.layers);
    let mut cells = Vec::with_capacity(config.layers);
    let mut masks = Vec::with_capacity(config.layers);
    let mut states = Vec::with_capacity(config.layers);
    let mut current = x.clone();
    let mut rng = rng;

    for layer in &params.layers {
        layer_inputs.push(current.clone());
        let fwd = cell_forward(&current, &layer.fwd, false);
        let bwd = cell_forward(&current, &layer.bwd, true);
        let mut out = concat_outputs(&fwd, &bwd);
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Seq2SeqError::NumericalDivergence { step: 0 });
        }
        let mask = if mode == Mode::Train && config.dropout_keep < 1.0 {
            let r = rng
                .as_deref_mut()
                .expect("train mode requires a dropout rng");
            let keep = config.dropout_keep;
            let m = Array3::from_shape_fn(out.dim(), |_| {
                if r.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            });
            out *= &m;
            Some(m)
        } else {
            None
        };

        let (hf, cf) = final_state(&fwd, false);
        let (hb, cb) = final_state(&bwd, true);
        states.push([hf, cf, hb, cb]);

        cells.push((fwd, bwd));
        masks.push(mask);
        current = out;
    }

    Ok((
        ForwardCache {
            layer_inputs,
            cells,
            masks,
            outputs: current,
        },
        EncoderState { layers: states },
    ))
}

/// Public encoder entry point: per-step top-layer outputs plus the final
/// state. In train mode a seeded rng must drive the dropout masks.
pub fn encode(
    x: &Array3<f64>,
    params: &Seq2SeqParams,
    config: &EncoderConfig,
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(Array3<f64>, EncoderState), Seq2SeqError> {
    let (cache, state) = encoder_forward(x, params, config, mode, rng)?;
    Ok((cache.outputs, state))
}

/// Stepwise linear decoder: x_hat_t = W_D · r_t + b_D.
pub fn decode(outputs: &Array3<f64>, dec: &DecoderParams) -> Array3<f64> {
    let (t_len, batch, _) = outputs.dim();
    let channels = dec.b.len();
    let mut x_hat = Array3::zeros((t_len, batch, channels));
    for t in 0..t_len {
        let r = outputs.index_axis(Axis(0), t);
        let y = r.dot(&dec.w.t()) + &dec.b;
        x_hat.index_axis_mut(Axis(0), t).assign(&y);
    }
    x_hat
}

/// Summed squared deviation per cycle, averaged over the batch.
pub fn mse_loss(x: &Array3<f64>, x_hat: &Array3<f64>) -> f64 {
    assert_eq!(x.dim(), x_hat.dim());
    let batch = x.dim().1 as f64;
    let mut total = 0.0;
    ndarray::Zip::from(x).and(x_hat).for_each(|a, b| {
        let d = a - b;
        total += d * d;
    });
    total / batch
}

/// Full forward + BPTT backward for one batch. Returns the loss and the
/// parameter gradients (same structure as the parameters).
pub(crate) fn forward_backward(
    x: &Array3<f64>,
    params: &Seq2SeqParams,
    config: &EncoderConfig,
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Seq2SeqParams), Seq2SeqError> {
    let (cache, _state) = encoder_forward(x, params, config, mode, rng)?;
    let x_hat = decode(&cache.outputs, &params.decoder);
    let loss = mse_loss(x, &x_hat);
    if !loss.is_finite() {
        return Err(Seq2SeqError::NumericalDivergence { step: 0 });
    }

    let (t_len, batch, _) = x.dim();
    let hidden = config.hidden_size;
    let mut grads = Seq2SeqParams::zeros(config, x.dim().2);

    // d loss / d x_hat with batch-mean reduction
    let scale = 2.0 / batch as f64;
    let mut d_out = Array3::zeros(cache.outputs.dim());
    for t in 0..t_len {
        let d_xhat = (&x_hat.index_axis(Axis(0), t) - &x.index_axis(Axis(0), t)) * scale;
        let r = cache.outputs.index_axis(Axis(0), t);
        grads.decoder.w += &d_xhat.t().dot(&r);
        grads.decoder.b += &d_xhat.sum_axis(Axis(0));
        d_out
            .index_axis_mut(Axis(0), t)
            .assign(&d_xhat.dot(&params.decoder.w));
    }

    // walk the layers top to bottom
    for l in (0..config.layers).rev() {
        if let Some(mask) = &cache.masks[l] {
            d_out *= mask;
        }
        let d_fwd = d_out.slice(s![.., .., ..hidden]).to_owned();
        let d_bwd = d_out.slice(s![.., .., hidden..]).to_owned();
        let input = &cache.layer_inputs[l];
        let (dx_f, g_f) = cell_backward(input, &cache.cells[l].0, &params.layers[l].fwd, &d_fwd, false);
        let (dx_b, g_b) = cell_backward(input, &cache.cells[l].1, &params.layers[l].bwd, &d_bwd, true);
        add_cell_grads(&mut grads.layers[l].fwd, &g_f);
        add_cell_grads(&mut grads.layers[l].bwd, &g_b);
        d_out = dx_f + dx_b;
    }

    Ok((loss, grads))
}

fn add_cell_grads(into: &mut CellParams, from: &CellParams) {
    into.w_x += &from.w_x;
    into.w_h += &from.w_h;
    into.b += &from.b;
    into.p_i += &from.p_i;
    into.p_f += &from.p_f;
    into.p_o += &from.p_o;
}
