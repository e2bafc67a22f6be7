//! Truncated Taylor series ("jets") for forward-mode differentiation of
//! expression trees. Coefficient `k` holds `f^(k)(x) / k!`.

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Jet(pub(crate) Vec<f64>);

impl Jet {
    pub fn constant(c: f64, order: usize) -> Self {
        let mut v = vec![0.0; order + 1];
        v[0] = c;
        Jet(v)
    }

    /// The jet of the identity map at `x`.
    pub fn variable(x: f64, order: usize) -> Self {
        let mut v = vec![0.0; order + 1];
        v[0] = x;
        if order >= 1 {
            v[1] = 1.0;
        }
        Jet(v)
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet(self.0.iter().map(|a| a * s).collect())
    }

    pub fn add_const(&self, c: f64) -> Jet {
        let mut v = self.0.clone();
        v[0] += c;
        Jet(v)
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let n = self.0.len();
        let mut v = vec![0.0; n];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = (0..=k).map(|j| self.0[j] * o.0[k - j]).sum();
        }
        Jet(v)
    }

    pub fn div(&self, o: &Jet) -> Jet {
        let n = self.0.len();
        let b0 = o.0[0];
        let mut q = vec![0.0; n];
        for k in 0..n {
            let s: f64 = (1..=k).map(|j| o.0[j] * q[k - j]).sum();
            q[k] = (self.0[k] - s) / b0;
        }
        Jet(q)
    }

    pub fn recip(&self) -> Jet {
        Jet::constant(1.0, self.order()).div(self)
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut acc = Jet::constant(1.0, self.order());
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// `u^alpha` for `u0 > 0`. At `u0 = 0` only the value is meaningful.
    pub fn powf(&self, alpha: f64) -> Jet {
        let u = &self.0;
        let n = u.len();
        let mut y = vec![0.0; n];
        y[0] = u[0].powf(alpha);
        for k in 1..n {
            let s: f64 = (1..=k)
                .map(|i| (alpha * i as f64 - (k - i) as f64) * u[i] * y[k - i])
                .sum();
            y[k] = s / (k as f64 * u[0]);
        }
        Jet(y)
    }

    pub fn ln(&self) -> Jet {
        let u = &self.0;
        let n = u.len();
        let mut y = vec![0.0; n];
        y[0] = u[0].ln();
        for k in 1..n {
            let s: f64 = (1..k).map(|j| j as f64 * y[j] * u[k - j]).sum();
            y[k] = (u[k] - s / k as f64) / u[0];
        }
        Jet(y)
    }

    pub fn exp(&self) -> Jet {
        let u = &self.0;
        let n = u.len();
        let mut y = vec![0.0; n];
        y[0] = u[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|i| i as f64 * u[i] * y[k - i]).sum();
            y[k] = s / k as f64;
        }
        Jet(y)
    }

    pub fn tan(&self) -> Jet {
        let u = &self.0;
        let n = u.len();
        let mut y = vec![0.0; n];
        // z = 1 + y^2
        let mut z = vec![0.0; n];
        y[0] = u[0].tan();
        z[0] = 1.0 + y[0] * y[0];
        for k in 1..n {
            let s: f64 = (1..=k).map(|i| i as f64 * u[i] * z[k - i]).sum();
            y[k] = s / k as f64;
            z[k] = (0..=k).map(|i| y[i] * y[k - i]).sum();
        }
        Jet(y)
    }

    /// Substitute this jet into a power series given by its coefficients about
    /// `self.value()`.
    pub fn compose_series(&self, coeffs: &[f64]) -> Jet {
        let order = self.order();
        let mut delta = self.clone();
        delta.0[0] = 0.0;
        let mut out = Jet::constant(0.0, order);
        let mut pow = Jet::constant(1.0, order);
        for (j, c) in coeffs.iter().enumerate().take(order + 1) {
            if j > 0 {
                pow = pow.mul(&delta);
            }
            out = out.add(&pow.scale(*c));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}
