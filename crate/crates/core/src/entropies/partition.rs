use std::fmt;
use std::str::FromStr;

use crate::qcore::DensityOperator;
use crate::{arg_err, Error, Result};

/// Bipartition of a state's subsystems into `A | B`; subsystems in neither
/// group are traced out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl Partition {
    pub fn new(a: Vec<usize>, b: Vec<usize>) -> Self {
        Self { a, b }
    }

    /// Subsystem 0 against subsystem 1.
    pub fn first_second() -> Self {
        Self::new(vec![0], vec![1])
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.b.clone(), self.a.clone())
    }

    /// Brings `state` into the form `rho_AB` with dims `[dA, dB]`.
    pub fn arrange(&self, state: &DensityOperator) -> Result<(DensityOperator, usize, usize)> {
        let n = state.dims().len();
        if self.a.is_empty() {
            return arg_err("partition needs a nonempty A side");
        }
        for &i in self.a.iter().chain(&self.b) {
            if i >= n {
                return arg_err(format!("subsystem {i} out of range for {n} subsystems"));
            }
        }
        if self.a.iter().any(|i| self.b.contains(i)) {
            return arg_err("partition sides overlap");
        }
        let mut keep: Vec<usize> = self.a.iter().chain(&self.b).copied().collect();
        keep.sort_unstable();
        keep.dedup();
        if keep.len() != self.a.len() + self.b.len() {
            return arg_err("repeated subsystem in partition");
        }
        let reduced = if keep.len() == n { state.clone() } else { state.partial_trace(&keep)? };
        // positions of a and b inside the kept (sorted) list
        let pos = |s: &usize| keep.iter().position(|k| k == s).unwrap();
        let order: Vec<usize> = self.a.iter().chain(&self.b).map(pos).collect();
        let arranged = reduced.permute(&order)?;
        let da: usize = self.a.iter().map(|&i| state.dims()[i]).product();
        let db: usize = self.b.iter().map(|&i| state.dims()[i]).product();
        Ok((arranged.with_dims(vec![da, db])?, da, db))
    }
}

impl Default for Partition {
    fn default() -> Self {
        Self::first_second()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{}|{}", j(&self.a), j(&self.b))
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses `"0|1"`, `"0,2|1"` or `"0|"` (empty B).
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once('|').ok_or_else(|| Error::Argument(format!("partition '{s}' must contain '|'")))?;
        let parse = |t: &str| -> Result<Vec<usize>> {
            t.split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| x.parse().map_err(|_| Error::Argument(format!("bad subsystem index '{x}'"))))
                .collect()
        };
        Ok(Self::new(parse(a)?, parse(b)?))
    }
}
