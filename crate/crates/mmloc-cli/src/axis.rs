//! Sweep axis syntax: `a,b,c`, `lin:start:stop:count`, `log:start:stop:count`,
//! and for integer axes `lo:hi`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct AxisError {
    pub flag: &'static str,
    pub reason: String,
}

impl fmt::Display for AxisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid value for `--{}`: {}", self.flag, self.reason)
    }
}

fn err(flag: &'static str, reason: impl Into<String>) -> AxisError {
    AxisError {
        flag,
        reason: reason.into(),
    }
}

fn number(flag: &'static str, s: &str) -> Result<f64, AxisError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(flag, format!("`{s}` is not a finite number")))
}

/// Parses a real-valued axis.
pub fn parse_real(flag: &'static str, spec: &str) -> Result<Vec<f64>, AxisError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [kind @ ("lin" | "log"), start, stop, count] => {
            let (a, b) = (number(flag, start)?, number(flag, stop)?);
            let n: usize = count
                .trim()
                .parse()
                .map_err(|_| err(flag, format!("`{count}` is not a point count")))?;
            if n == 0 {
                return Err(err(flag, "a sweep needs at least one point"));
            }
            if *kind == "log" && !(a > 0.0 && b > 0.0) {
                return Err(err(flag, "log spacing needs positive end points"));
            }
            (0..n)
                .map(|i| {
                    let t = if n == 1 {
                        0.0
                    } else {
                        i as f64 / (n - 1) as f64
                    };
                    if *kind == "lin" {
                        a + t * (b - a)
                    } else {
                        a * (b / a).powf(t)
                    }
                })
                .collect()
        }
        [single] => single
            .split(',')
            .map(|s| number(flag, s))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(err(flag, format!("cannot read `{spec}`"))),
    };
    if values.is_empty() {
        return Err(err(flag, "empty sweep"));
    }
    Ok(values)
}

/// Parses an integer axis of positive values.
pub fn parse_sizes(flag: &'static str, spec: &str) -> Result<Vec<usize>, AxisError> {
    let int = |s: &str| {
        s.trim()
            .parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| err(flag, format!("`{s}` is not a positive integer")))
    };
    let values: Vec<usize> = match spec.split_once(':') {
        Some((lo, hi)) => {
            let (lo, hi) = (int(lo)?, int(hi)?);
            if lo > hi {
                return Err(err(flag, format!("empty range {lo}:{hi}")));
            }
            (lo..=hi).collect()
        }
        None => spec.split(',').map(int).collect::<Result<_, _>>()?,
    };
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_real("beta", "0.5,0.9").unwrap(), vec![0.5, 0.9]);
        assert_eq!(
            parse_real("beta", "lin:0:1:3").unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        let g = parse_real("lambda", "log:0.01:1:3").unwrap();
        assert!((g[1] - 0.1).abs() < 1e-15);
        assert_eq!(parse_sizes("k", "2:4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_sizes("k", "4,16").unwrap(), vec![4, 16]);
    }

    #[test]
    fn bad_axes_are_rejected() {
        assert!(parse_real("beta", "lin:0:1:0").is_err());
        assert!(parse_real("lambda", "log:0:1:3").is_err());
        assert!(parse_real("beta", "x").is_err());
        assert!(parse_sizes("k", "0:3").is_err());
        assert!(parse_sizes("k", "5:3").is_err());
    }
}
