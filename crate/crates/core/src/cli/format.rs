//! Locale-independent CSV number formatting with 12 significant digits.

const DIGITS: i32 = 12;

/// Shortest rendering of `x` rounded to 12 significant digits. Plain decimal
/// notation for magnitudes in `[1e-5, 1e12)`, scientific otherwise.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa), exp)
    }
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(-2.25), "-2.25");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(123456.7890123456), "123456.789012");
        assert_eq!(num(1e-7), "1e-7");
        assert_eq!(num(1.5e15), "1.5e15");
        assert_eq!(num(0.1 + 0.2), "0.3");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(9.9999999999999e-6), "0.00001");
        assert_eq!(num(2.5e-6), "2.5e-6");
    }
}
