use serde::{Deserialize, Serialize};

use super::ValidationReport;
use crate::error::{structural, Result};

/// Jump rate `b(n, m)` from a site holding `n` particles to a site holding `m`,
/// tabulated on `{0..K}²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateTable", into = "RateTable")]
pub struct RateFunction {
    capacity: u8,
    table: Vec<f64>,
    sup_norm: f64,
}

/// Serialized form: the capacity and the `(K+1) x (K+1)` table by rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateTable {
    pub capacity: u8,
    pub rows: Vec<Vec<f64>>,
}

impl RateFunction {
    /// Builds a rate function from its rows `b(n, ·)`, `n = 0..=K`.
    ///
    /// Fails with a structural error if the table is not `(K+1) x (K+1)` or
    /// holds a negative or non-finite entry. Assumption checks are separate,
    /// see [`RateFunction::validate`].
    pub fn new(capacity: u8, rows: Vec<Vec<f64>>) -> Result<Self> {
        if capacity == 0 {
            return Err(structural("capacity K must be at least 1"));
        }
        let side = capacity as usize + 1;
        if rows.len() != side {
            return Err(structural(format!(
                "rate table has {} rows, expected K+1 = {side}",
                rows.len()
            )));
        }
        let mut table = Vec::with_capacity(side * side);
        for (n, row) in rows.iter().enumerate() {
            if row.len() != side {
                return Err(structural(format!(
                    "rate table row {n} has {} entries, expected K+1 = {side}",
                    row.len()
                )));
            }
            for (m, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(structural(format!("rate b({n},{m}) = {v} is not a nonnegative number")));
                }
                table.push(v);
            }
        }
        let sup_norm = table.iter().cloned().fold(0.0, f64::max);
        Ok(Self { capacity, table, sup_norm })
    }

    pub fn from_fn(capacity: u8, f: impl Fn(u8, u8) -> f64) -> Result<Self> {
        let rows = (0..=capacity)
            .map(|n| (0..=capacity).map(|m| f(n, m)).collect())
            .collect();
        Self::new(capacity, rows)
    }

    /// `b(n, m) = 1{n > 0} 1{m < K}`, the K-exclusion rate.
    pub fn exclusion(capacity: u8) -> Self {
        Self::from_fn(capacity, |n, m| if n > 0 && m < capacity { 1.0 } else { 0.0 })
            .expect("exclusion table is well formed")
    }

    #[inline]
    pub fn rate(&self, n: u8, m: u8) -> f64 {
        self.table[n as usize * (self.capacity as usize + 1) + m as usize]
    }

    pub fn capacity(&self) -> u8 {
        self.capacity
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.table.chunks(self.capacity as usize + 1).map(|r| r.to_vec()).collect()
    }

    /// Checks the K-exclusion rule (A3), non-degeneracy (A4) and
    /// attractiveness (A5), reporting the first violating index pair of each.
    pub fn validate(&self) -> ValidationReport {
        let k = self.capacity;
        let mut report = ValidationReport::new();

        let a3 = (0..=k)
            .find(|&m| self.rate(0, m) != 0.0)
            .map(|m| format!("b(0,{m}) = {} != 0", self.rate(0, m)))
            .or_else(|| {
                (0..=k)
                    .find(|&n| self.rate(n, k) != 0.0)
                    .map(|n| format!("b({n},{k}) = {} != 0", self.rate(n, k)))
            });
        match a3 {
            None => report.push("A3", true, "b(0,.) = 0 and b(.,K) = 0"),
            Some(d) => report.push("A3", false, d),
        }

        let b1 = self.rate(1, k - 1);
        report.push("A4", b1 > 0.0, format!("b(1,K-1) = {b1}"));

        let mut a5 = None;
        'scan: for n in 0..=k {
            for m in 0..=k {
                if n < k && self.rate(n, m) > self.rate(n + 1, m) {
                    a5 = Some(format!("not nondecreasing in n at ({n},{m})->({},{m})", n + 1));
                    break 'scan;
                }
                if m < k && self.rate(n, m) < self.rate(n, m + 1) {
                    a5 = Some(format!("not nonincreasing in m at ({n},{m})->({n},{})", m + 1));
                    break 'scan;
                }
            }
        }
        match a5 {
            None => report.push("A5", true, "b nondecreasing in n, nonincreasing in m"),
            Some(d) => report.push("A5", false, d),
        }
        report
    }
}

impl TryFrom<RateTable> for RateFunction {
    type Error = crate::Error;

    fn try_from(t: RateTable) -> Result<Self> {
        Self::new(t.capacity, t.rows)
    }
}

impl From<RateFunction> for RateTable {
    fn from(r: RateFunction) -> Self {
        RateTable { capacity: r.capacity, rows: r.rows() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exclusion_rate_passes_for_several_capacities() {
        for k in 1..=4 {
            let report = RateFunction::exclusion(k).validate();
            assert!(report.passed(), "K={k}: {report}");
        }
    }

    #[test]
    fn product_rate_passes() {
        let k = 3;
        let b = RateFunction::from_fn(k, |n, m| n as f64 * (k - m) as f64).unwrap();
        assert!(b.validate().passed());
        assert_eq!(b.sup_norm(), 9.0);
    }

    #[test]
    fn increasing_in_second_argument_fails_a5() {
        let b = RateFunction::from_fn(2, |n, m| n as f64 * m as f64).unwrap();
        let report = b.validate();
        let a5 = report.check("A5").unwrap();
        assert!(!a5.passed);
        assert!(a5.detail.contains("(1,0)->(1,1)"), "{}", a5.detail);
        assert!(!report.passed());
    }

    #[test]
    fn degenerate_rate_fails_a4() {
        let b = RateFunction::from_fn(2, |n, m| if n == 2 && m == 0 { 1.0 } else { 0.0 }).unwrap();
        let report = b.validate();
        assert!(!report.check("A4").unwrap().passed);
        assert!(report.check("A3").unwrap().passed);
    }

    #[test]
    fn malformed_tables_are_structural_errors() {
        assert!(matches!(RateFunction::new(1, vec![vec![0.0, 0.0]]), Err(crate::Error::Structural(_))));
        assert!(matches!(
            RateFunction::new(1, vec![vec![0.0, 0.0], vec![1.0]]),
            Err(crate::Error::Structural(_))
        ));
        assert!(RateFunction::new(1, vec![vec![0.0, 0.0], vec![-1.0, 0.0]]).is_err());
        assert!(RateFunction::new(0, vec![vec![0.0]]).is_err());
    }

    #[test]
    fn validation_is_pure() {
        let b = RateFunction::from_fn(2, |n, m| n as f64 * m as f64).unwrap();
        assert_eq!(b.validate(), b.validate());
    }
}
