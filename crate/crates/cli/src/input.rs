use std::fmt::Write as _;
use std::path::Path;

use rhmc_core::{Matrix, Polytope};

use crate::{Failure, PolytopeSource};

/// Parses `hypercube:n:lo:hi`, `simplex:n` or `random:n:m:seed`.
pub fn builtin(desc: &str) -> Result<Polytope, Failure> {
    let parts: Vec<&str> = desc.split(':').collect();
    let bad = || Failure::usage(format!("unrecognized builtin {desc:?}"));
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let real = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let p = match parts.as_slice() {
        ["hypercube", n, lo, hi] => Polytope::hypercube(int(n)?, real(lo)?, real(hi)?),
        ["simplex", n] => Polytope::simplex(int(n)?),
        ["random", n, m, seed] => Polytope::random(int(n)?, int(m)?, seed.trim().parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    };
    Ok(p?)
}

pub fn load(source: &PolytopeSource) -> Result<Option<(String, Polytope)>, Failure> {
    match (&source.builtin, &source.polytope) {
        (Some(desc), _) => Ok(Some((desc.clone(), builtin(desc)?))),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            let p = Polytope::parse(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            Ok(Some((text, p)))
        }
        (None, None) => Ok(None),
    }
}

/// Comma- or whitespace-separated reals, inline or from a file.
pub fn vector(value: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let path = Path::new(value);
    let text = if path.is_file() {
        std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?
    } else {
        value.to_string()
    };
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::usage(format!("{what}: cannot parse {t:?} as a finite number")))
        })
        .collect()
}

/// One row per sample, `{:.16e}` fields, LF line endings.
pub fn csv(samples: &Matrix<f64>) -> String {
    let mut out = String::with_capacity(samples.nrows() * samples.ncols() * 24);
    for row in samples.rows_iter() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v:.16e}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_descriptors() {
        assert_eq!(builtin("hypercube:3:0:1").unwrap().m(), 6);
        assert_eq!(builtin("simplex:4").unwrap().n(), 4);
        assert_eq!(builtin("random:3:6:7").unwrap().m(), 6);
        for bad in ["cube:3", "hypercube:3:0", "simplex:x", "random:3:2:1", "hypercube:2:1:0"] {
            assert_eq!(builtin(bad).unwrap_err().code, 2, "{bad}");
        }
    }

    #[test]
    fn inline_vectors() {
        assert_eq!(vector("1,2, 3", "alpha").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(vector("1,nan", "alpha").unwrap_err().code, 2);
    }

    #[test]
    fn csv_format() {
        let m = Matrix::from_row_slice(2, 2, &[0.5, -1.0, 0.25, 3.0]).unwrap();
        assert_eq!(
            csv(&m),
            "5.0000000000000000e-1,-1.0000000000000000e0\n2.5000000000000000e-1,3.0000000000000000e0\n"
        );
    }
}
