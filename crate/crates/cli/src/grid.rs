use std::str::FromStr;

/// Inclusive axis `LO:HI:N`. Point `i` is `((N-1-i) LO + i HI) / (N-1)`, so
/// both endpoints are exact and a symmetric odd grid contains exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl AxisRange {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let m = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                let i = i as f64;
                ((m - i) * self.lo + i * self.hi) / m
            })
            .collect()
    }
}

impl FromStr for AxisRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(format!("expected LO:HI:N, got {s:?}"));
        };
        let lo: f64 = lo.parse().map_err(|_| format!("bad lower bound {lo:?}"))?;
        let hi: f64 = hi.parse().map_err(|_| format!("bad upper bound {hi:?}"))?;
        let n: usize = n.parse().map_err(|_| format!("bad point count {n:?}"))?;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err("range bounds must be finite".into());
        }
        if n == 0 {
            return Err("point count must be at least 1".into());
        }
        if n > 1 && !(hi > lo) {
            return Err("range needs LO < HI".into());
        }
        Ok(Self { lo, hi, n })
    }
}
