//! Fixed-format numeric output shared by the CSV writers.

/// Scientific notation with 12 significant digits. Non-finite values are
/// spelled `inf`, `-inf` and `nan`.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.11e}")
    }
}

pub fn row(values: &[f64]) -> String {
    values.iter().map(|&v| sci(v)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sci(1.0), "1.00000000000e0");
        assert_eq!(sci(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(sci(f64::INFINITY), "inf");
        assert_eq!(row(&[0.5, 2.0]), "5.00000000000e-1,2.00000000000e0");
    }
}
