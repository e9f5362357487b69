//! Peephole LSTM cell: batched forward over a whole sequence and the
//! matching backward pass.
//!
//! Gate order along the 4H axis is input, forget, candidate, output. The
//! input and forget gates peek at the previous cell state, the output gate
//! at the updated one.

use ndarray::{s, Array1, Array2, Array3, Axis};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CellParams {
    /// Input weights, (input_size, 4H).
    pub w_x: Array2<f64>,
    /// Recurrent weights, (H, 4H).
    pub w_h: Array2<f64>,
    /// Gate biases, (4H,).
    pub b: Array1<f64>,
    /// Peephole vectors, (H,) each.
    pub p_i: Array1<f64>,
    pub p_f: Array1<f64>,
    pub p_o: Array1<f64>,
}

impl CellParams {
    pub fn hidden_size(&self) -> usize {
        self.w_h.nrows()
    }

    pub fn input_size(&self) -> usize {
        self.w_x.nrows()
    }

    pub fn zeros(input_size: usize, hidden: usize) -> Self {
        Self {
            w_x: Array2::zeros((input_size, 4 * hidden)),
            w_h: Array2::zeros((hidden, 4 * hidden)),
            b: Array1::zeros(4 * hidden),
            p_i: Array1::zeros(hidden),
            p_f: Array1::zeros(hidden),
            p_o: Array1::zeros(hidden),
        }
    }

    pub fn param_count(&self) -> usize {
        self.w_x.len() + self.w_h.len() + self.b.len() + 3 * self.p_i.len()
    }
}

/// Gradients mirror the parameter layout.
pub type CellGrads = CellParams;

/// Per-step activations kept for backpropagation. All arrays are
/// (T, B, H), indexed by input time position regardless of processing
/// direction.
pub struct CellCache {
    pub i: Array3<f64>,
    pub f: Array3<f64>,
    pub g: Array3<f64>,
    pub o: Array3<f64>,
    pub c: Array3<f64>,
    pub c_prev: Array3<f64>,
    pub h_prev: Array3<f64>,
    pub h: Array3<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Run the cell over a full sequence. `reverse` processes time back to
/// front (the backward direction of a bidirectional layer); outputs stay
/// aligned with input time positions either way.
pub fn cell_forward(x: &Array3<f64>, params: &CellParams, reverse: bool) -> CellCache {
    let (t_len, batch, _) = x.dim();
    let hidden = params.hidden_size();

    let mut cache = CellCache {
        i: Array3::zeros((t_len, batch, hidden)),
        f: Array3::zeros((t_len, batch, hidden)),
        g: Array3::zeros((t_len, batch, hidden)),
        o: Array3::zeros((t_len, batch, hidden)),
        c: Array3::zeros((t_len, batch, hidden)),
        c_prev: Array3::zeros((t_len, batch, hidden)),
        h_prev: Array3::zeros((t_len, batch, hidden)),
        h: Array3::zeros((t_len, batch, hidden)),
    };

    let mut h = Array2::<f64>::zeros((batch, hidden));
    let mut c = Array2::<f64>::zeros((batch, hidden));

    let order: Vec<usize> = if reverse {
        (0..t_len).rev().collect()
    } else {
        (0..t_len).collect()
    };

    for &t in &order {
        let x_t = x.index_axis(Axis(0), t);
        let pre = x_t.dot(&params.w_x) + h.dot(&params.w_h) + &params.b;

        cache.c_prev.index_axis_mut(Axis(0), t).assign(&c);
        cache.h_prev.index_axis_mut(Axis(0), t).assign(&h);

        let mut i_g = Array2::zeros((batch, hidden));
        let mut f_g = Array2::zeros((batch, hidden));
        let mut g_g = Array2::zeros((batch, hidden));
        let mut o_g = Array2::zeros((batch, hidden));
        let mut c_new = Array2::zeros((batch, hidden));
        let mut h_new = Array2::zeros((batch, hidden));

        for b_i in 0..batch {
            for u in 0..hidden {
                let iv = sigmoid(pre[(b_i, u)] + params.p_i[u] * c[(b_i, u)]);
                let fv = sigmoid(pre[(b_i, hidden + u)] + params.p_f[u] * c[(b_i, u)]);
                let gv = pre[(b_i, 2 * hidden + u)].tanh();
                let cv = fv * c[(b_i, u)] + iv * gv;
                let ov = sigmoid(pre[(b_i, 3 * hidden + u)] + params.p_o[u] * cv);
                i_g[(b_i, u)] = iv;
                f_g[(b_i, u)] = fv;
                g_g[(b_i, u)] = gv;
                o_g[(b_i, u)] = ov;
                c_new[(b_i, u)] = cv;
                h_new[(b_i, u)] = ov * cv.tanh();
            }
        }

        cache.i.index_axis_mut(Axis(0), t).assign(&i_g);
        cache.f.index_axis_mut(Axis(0), t).assign(&f_g);
        cache.g.index_axis_mut(Axis(0), t).assign(&g_g);
        cache.o.index_axis_mut(Axis(0), t).assign(&o_g);
        cache.c.index_axis_mut(Axis(0), t).assign(&c_new);
        cache.h.index_axis_mut(Axis(0), t).assign(&h_new);
        h = h_new;
        c = c_new;
    }

    cache
}

/// Backpropagate `dh_seq` (gradient w.r.t. the per-step outputs, aligned
/// with input time) through the cached forward pass. Returns the gradient
/// w.r.t. the input sequence and the parameter gradients.
pub fn cell_backward(
    x: &Array3<f64>,
    cache: &CellCache,
    params: &CellParams,
    dh_seq: &Array3<f64>,
    reverse: bool,
) -> (Array3<f64>, CellGrads) {
    let (t_len, batch, input_size) = x.dim();
    let hidden = params.hidden_size();
    let mut grads = CellGrads::zeros(input_size, hidden);
    let mut dx = Array3::zeros((t_len, batch, input_size));

    let mut dh_rec = Array2::<f64>::zeros((batch, hidden));
    let mut dc_rec = Array2::<f64>::zeros((batch, hidden));

    // reverse of the processing order
    let order: Vec<usize> = if reverse {
        (0..t_len).collect()
    } else {
        (0..t_len).rev().collect()
    };

    for &t in &order {
        let i_g = cache.i.index_axis(Axis(0), t);
        let f_g = cache.f.index_axis(Axis(0), t);
        let g_g = cache.g.index_axis(Axis(0), t);
        let o_g = cache.o.index_axis(Axis(0), t);
        let c_t = cache.c.index_axis(Axis(0), t);
        let c_prev = cache.c_prev.index_axis(Axis(0), t);
        let h_prev = cache.h_prev.index_axis(Axis(0), t);

        // preactivation gradients for the four gates, stacked (B, 4H)
        let mut a = Array2::<f64>::zeros((batch, 4 * hidden));
        let mut dc_prev_out = Array2::<f64>::zeros((batch, hidden));

        for b_i in 0..batch {
            for u in 0..hidden {
                let dh = dh_seq[(t, b_i, u)] + dh_rec[(b_i, u)];
                let tc = c_t[(b_i, u)].tanh();
                let ov = o_g[(b_i, u)];
                let do_pre = dh * tc * ov * (1.0 - ov);
                let mut dc = dh * ov * (1.0 - tc * tc)
                    + dc_rec[(b_i, u)]
                    + do_pre * params.p_o[u];
                let iv = i_g[(b_i, u)];
                let fv = f_g[(b_i, u)];
                let gv = g_g[(b_i, u)];
                let di_pre = dc * gv * iv * (1.0 - iv);
                let df_pre = dc * c_prev[(b_i, u)] * fv * (1.0 - fv);
                let dg_pre = dc * iv * (1.0 - gv * gv);

                a[(b_i, u)] = di_pre;
                a[(b_i, hidden + u)] = df_pre;
                a[(b_i, 2 * hidden + u)] = dg_pre;
                a[(b_i, 3 * hidden + u)] = do_pre;

                dc *= fv;
                dc += di_pre * params.p_i[u] + df_pre * params.p_f[u];
                dc_prev_out[(b_i, u)] = dc;

                grads.p_i[u] += di_pre * c_prev[(b_i, u)];
                grads.p_f[u] += df_pre * c_prev[(b_i, u)];
                grads.p_o[u] += do_pre * c_t[(b_i, u)];
            }
        }

        let x_t = x.index_axis(Axis(0), t);
        grads.w_x += &x_t.t().dot(&a);
        grads.w_h += &h_prev.t().dot(&a);
        grads.b += &a.sum_axis(Axis(0));

        dx.index_axis_mut(Axis(0), t).assign(&a.dot(&params.w_x.t()));
        dh_rec = a.dot(&params.w_h.t());
        dc_rec = dc_prev_out;
    }

    (dx, grads)
}

/// Final hidden and cell state of a processed sequence: last time index
/// for the forward direction, first for the backward one.
pub fn final_state(cache: &CellCache, reverse: bool) -> (Array2<f64>, Array2<f64>) {
    let t = if reverse { 0 } else { cache.h.dim().0 - 1 };
    (
        cache.h.slice(s![t, .., ..]).to_owned(),
        cache.c.slice(s![t, .., ..]).to_owned(),
    )
}
