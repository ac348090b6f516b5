//! Deterministic JSON output: floats in `%.12e` form.

use serde::Serializer;

/// `x` formatted like C's `%.12e`: twelve fraction digits, signed exponent of at least two digits.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Serializes a float as a JSON number written with [`sci`]; non-finite values become strings.
pub fn serialize_sci<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_str(&x.to_string());
    }
    let n: serde_json::Number = sci(*x).parse().map_err(serde::ser::Error::custom)?;
    serde::Serialize::serialize(&n, s)
}

/// Pretty JSON of a serializable value.
pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponents() {
        assert_eq!(sci(1.0), "1.000000000000e+00");
        assert_eq!(sci(-2.5e-10), "-2.500000000000e-10");
        assert_eq!(sci(0.0), "0.000000000000e+00");
        assert_eq!(sci(1.5e123), "1.500000000000e+123");
    }

    #[test]
    fn numbers_keep_their_text() {
        #[derive(serde::Serialize)]
        struct W {
            #[serde(serialize_with = "serialize_sci")]
            x: f64,
        }
        assert_eq!(serde_json::to_string(&W { x: 0.1 }).unwrap(), r#"{"x":1.000000000000e-01}"#);
    }
}
