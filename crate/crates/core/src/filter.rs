//! Digital filtering primitives: Butterworth low-pass design as cascaded
//! biquads, zero-phase forward-backward filtering, and Gaussian-family
//! convolution kernels used by the event detector.

/// Second-order section with normalized a0 = 1.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

/// Butterworth low-pass of even order `order`, designed by pairing the
/// analog prototype poles into biquads and applying the bilinear transform
/// with frequency prewarping.
pub fn butterworth_lowpass(order: usize, cutoff: f64, sample_rate: f64) -> Vec<Biquad> {
    assert!(order >= 2 && order % 2 == 0, "even order required");
    assert!(cutoff > 0.0 && cutoff < sample_rate / 2.0);

    let wc = 2.0 * sample_rate * (std::f64::consts::PI * cutoff / sample_rate).tan();
    let k = 2.0 * sample_rate;
    let n = order as f64;

    let mut sections = Vec::with_capacity(order / 2);
    for m in 0..order / 2 {
        // Conjugate pole pair of the analog prototype, scaled by wc.
        let theta = std::f64::consts::PI * (2.0 * m as f64 + n + 1.0) / (2.0 * n);
        let re = wc * theta.cos();
        // (s - p)(s - p*) = s^2 + a1 s + a0
        let a1 = -2.0 * re;
        let a0 = wc * wc;

        let d0 = k * k + a1 * k + a0;
        let b = [wc * wc / d0, 2.0 * wc * wc / d0, wc * wc / d0];
        let a = [(2.0 * a0 - 2.0 * k * k) / d0, (k * k - a1 * k + a0) / d0];
        sections.push(Biquad { b, a });
    }
    sections
}

/// Steady-state direct-form-II-transposed state for a constant input equal
/// to `x0`, used to suppress the startup transient.
fn steady_state(s: &Biquad, x0: f64) -> [f64; 2] {
    let g = (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[0] + s.a[1]);
    let z2 = (s.b[2] - s.a[1] * g) * x0;
    let z1 = (g - s.b[0]) * x0;
    [z1, z2]
}

fn sosfilt(sections: &[Biquad], x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for s in sections {
        let mut z = steady_state(s, *y.first().unwrap_or(&0.0));
        for v in y.iter_mut() {
            let x_in = *v;
            let out = s.b[0] * x_in + z[0];
            z[0] = s.b[1] * x_in - s.a[0] * out + z[1];
            z[1] = s.b[2] * x_in - s.a[1] * out;
            *v = out;
        }
    }
    y
}

/// Forward-backward application of a biquad cascade with odd-reflection
/// padding, giving a zero-phase overall response.
pub fn filtfilt(sections: &[Biquad], x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let pad = (3 * (2 * sections.len() + 1) * 2).min(x.len() - 1);

    let mut ext = Vec::with_capacity(x.len() + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    let last = *x.last().unwrap();
    for i in 1..=pad {
        ext.push(2.0 * last - x[x.len() - 1 - i]);
    }

    let mut y = sosfilt(sections, &ext);
    y.reverse();
    let mut y = sosfilt(sections, &y);
    y.reverse();
    y[pad..pad + x.len()].to_vec()
}

/// Sampled Gaussian kernel with standard deviation `sigma` (in samples),
/// truncated at 4 sigma and normalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0);
    let half = (4.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| (-(i as f64 * i as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in k.iter_mut() {
        *v /= sum;
    }
    k
}

/// Negated second derivative of a Gaussian (Ricker / Mexican-hat shape),
/// zero-mean, with width `sigma` in samples.
pub fn ricker_kernel(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0);
    let half = (4.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| {
            let t = i as f64 / sigma;
            (1.0 - t * t) * (-t * t / 2.0).exp()
        })
        .collect();
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    for v in k.iter_mut() {
        *v -= mean;
    }
    k
}

/// Symmetric-kernel convolution with reflect padding; output has the same
/// length as the input.
pub fn convolve_same(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    assert!(kernel.len() % 2 == 1, "kernel must have odd length");
    let half = (kernel.len() / 2) as i64;
    let n = x.len() as i64;
    let reflect = |i: i64| -> usize {
        let mut i = i;
        // mirror without repeating the edge sample
        loop {
            if i < 0 {
                i = -i;
            } else if i >= n {
                i = 2 * n - 2 - i;
            } else {
                return i as usize;
            }
        }
    };
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, &kv) in kernel.iter().enumerate() {
                acc += kv * x[reflect(i + j as i64 - half)];
            }
            acc
        })
        .collect()
}
