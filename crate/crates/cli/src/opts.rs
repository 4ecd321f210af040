//! Option sets shared by flags and JSON config files. Every flag `--foo-bar`
//! corresponds to the config key `foo_bar`; flags win over file values.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;

/// Values accepted in comma-separated lists; integers also accept `a..b` (inclusive).
pub trait ListItem: FromStr + Clone {
    fn from_index(i: usize) -> Option<Self>;
}

impl ListItem for usize {
    fn from_index(i: usize) -> Option<Self> {
        Some(i)
    }
}

impl ListItem for i32 {
    fn from_index(i: usize) -> Option<Self> {
        i32::try_from(i).ok()
    }
}

impl ListItem for f64 {
    fn from_index(_: usize) -> Option<Self> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: ListItem> FromStr for List<T> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for piece in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((a, b)) = piece.split_once("..") {
                let a: usize = a.trim().parse().map_err(|_| format!("bad range '{piece}'"))?;
                let b: usize = b.trim().parse().map_err(|_| format!("bad range '{piece}'"))?;
                if a > b {
                    return Err(format!("empty range '{piece}'"));
                }
                for i in a..=b {
                    out.push(T::from_index(i).ok_or_else(|| format!("ranges are not allowed here: '{piece}'"))?);
                }
            } else {
                out.push(piece.parse().map_err(|_| format!("bad list entry '{piece}'"))?);
            }
        }
        if out.is_empty() {
            return Err("empty list".into());
        }
        Ok(List(out))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ListRepr<T> {
    Items(Vec<T>),
    Text(String),
}

impl<'de, T: ListItem + Deserialize<'de>> Deserialize<'de> for List<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match ListRepr::<T>::deserialize(d)? {
            ListRepr::Items(v) if !v.is_empty() => Ok(List(v)),
            ListRepr::Items(_) => Err(serde::de::Error::custom("empty list")),
            ListRepr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Rows separated by `;`, entries by `,`; in JSON an array of arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct Rows<T>(pub Vec<Vec<T>>);

impl<T: ListItem> FromStr for Rows<T> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(';').map(|r| r.parse::<List<T>>().map(|l| l.0)).collect::<Result<_, _>>().map(Rows)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RowsRepr<T> {
    Items(Vec<Vec<T>>),
    Text(String),
}

impl<'de, T: ListItem + Deserialize<'de>> Deserialize<'de> for Rows<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RowsRepr::<T>::deserialize(d)? {
            RowsRepr::Items(v) => Ok(Rows(v)),
            RowsRepr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl<T: fmt::Debug> fmt::Display for List<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Declares an option struct usable both as clap arguments and as a config
/// document, plus `over`, which fills unset flags from the file.
macro_rules! options {
    ($(#[$m:meta])* pub struct $name:ident { $( $(#[$fm:meta])* $field:ident : $ty:ty, )* }) => {
        $(#[$m])*
        #[derive(clap::Args, Deserialize, Default, Debug, Clone)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $( $(#[$fm])* #[arg(long)] pub $field: Option<$ty>, )*
        }

        impl $name {
            pub fn over(self, file: Self) -> Self {
                $name { $( $field: self.$field.or(file.$field), )* }
            }
        }
    };
}

options! {
    /// Keys common to every subcommand.
    pub struct Common {
        /// Master seed; falls back to CAYLEYLAB_SEED, then 0.
        seed: u64,
        /// native, dd or qd.
        precision: String,
        /// Size of the worker pool (default: logical cores).
        threads: usize,
        /// Result file; standard output when absent.
        output: PathBuf,
    }
}

options! {
    /// Target circuit and reduction parameters.
    pub struct ReduceOpts {
        /// Number of qubits.
        n: usize,
        /// Number of layers for the generated layout.
        depth: usize,
        /// global or brickwork.
        layout: String,
        /// Explicit slots, e.g. "0,1;1,2".
        slots: Rows<usize>,
        /// Target circuit as JSON; a Haar-random target is drawn otherwise.
        circuit: PathBuf,
        /// ±1 truth table of a Fourier-sampling target.
        truth_table: List<i32>,
        delta_end: f64,
        grid_size: usize,
        delta: f64,
        eta: f64,
        /// offset, random-unit or chebyshev.
        adversary: String,
        /// Offset shift or Chebyshev amplitude.
        adversary_scale: f64,
        margin: f64,
        /// cayley or taylor.
        transform: String,
        taylor_order: usize,
        rescale: usize,
        budget: usize,
        growth_constant: f64,
        /// Depolarizing strength (reduce-noisy).
        gamma: f64,
        /// 1q or slot (reduce-noisy).
        noise_arity: String,
        /// json or csv.
        format: String,
    }
}

options! {
    pub struct PermanentOpts {
        /// Matrix size.
        n: usize,
        /// 0/1 target rows, e.g. "1,0;0,1"; random when absent.
        x0: Rows<usize>,
        delta_end: f64,
        grid_size: usize,
        delta: f64,
        eta: f64,
        adversary: String,
        adversary_scale: f64,
        budget: usize,
    }
}

options! {
    pub struct CpOpts {
        n: usize,
        gamma: f64,
        /// e.g. "1..6".
        depths: List<usize>,
        trials: usize,
    }
}

options! {
    pub struct BoundsOpts {
        /// chebyshev, markov, coefficients, rescaling or all.
        check: String,
        dmax: usize,
        /// Random polynomials per degree for the coefficient check.
        samples: usize,
    }
}

options! {
    pub struct RationalOpts {
        n: usize,
        depth: usize,
        layout: String,
        slots: Rows<usize>,
        /// Number of seeds, derived from the master seed.
        seeds: usize,
        /// Fit degree; defaults to the numerator degree.
        degree: usize,
        /// Degree reduction of the negative control.
        control_gap: usize,
        tol: f64,
        /// Depolarizing strength; noiseless when absent.
        gamma: f64,
        noise_arity: String,
    }
}

options! {
    pub struct TvOpts {
        dim: usize,
        thetas: List<f64>,
        samples: usize,
        bins: usize,
        /// Gate count used for the additive bound column.
        gates: usize,
    }
}

options! {
    pub struct BarrierOpts {
        n: usize,
        /// Barrier weight; defaults to 1/(n!)^2.
        t: f64,
        thetas: List<f64>,
        samples: usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsing() {
        assert_eq!("1..3,7".parse::<List<usize>>().unwrap().0, vec![1, 2, 3, 7]);
        assert_eq!("1,-1".parse::<List<i32>>().unwrap().0, vec![1, -1]);
        assert!("0..2".parse::<List<f64>>().is_err());
        assert!("".parse::<List<usize>>().is_err());
        assert_eq!("0,1;1,2".parse::<Rows<usize>>().unwrap().0, vec![vec![0, 1], vec![1, 2]]);
        let l: List<f64> = serde_json::from_str("[0.5, 1]").unwrap();
        assert_eq!(l.0, vec![0.5, 1.0]);
        let l: List<usize> = serde_json::from_str("\"2..4\"").unwrap();
        assert_eq!(l.0, vec![2, 3, 4]);
    }

    #[test]
    fn flags_override_file() {
        let file: CpOpts = serde_json::from_str(r#"{"n": 3, "gamma": 0.2}"#).unwrap();
        let flags = CpOpts { gamma: Some(0.1), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!(merged.n, Some(3));
        assert_eq!(merged.gamma, Some(0.1));
        assert!(serde_json::from_str::<CpOpts>(r#"{"gama": 0.2}"#).is_err());
    }
}
