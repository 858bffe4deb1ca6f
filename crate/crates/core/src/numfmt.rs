/// Renders `v` with `digits` significant digits in the style of C's `%g`:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros removed.
pub fn sig(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    // `{:e}` rounds correctly; read the exponent back from it so that
    // rounding across a power of ten is accounted for.
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn g_style() {
        assert_eq!(sig(0.0, 9), "0");
        assert_eq!(sig(2.0, 9), "2");
        assert_eq!(sig(-0.1, 9), "-0.1");
        assert_eq!(sig(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(sig(123456789.4, 9), "123456789");
        assert_eq!(sig(1234567894.0, 9), "1.23456789e9");
        assert_eq!(sig(9.9999999999, 9), "10");
        assert_eq!(sig(1.5e-7, 9), "1.5e-7");
        assert_eq!(sig(0.000123, 9), "0.000123");
    }

    #[test]
    fn parses_back_within_precision() {
        for &v in &[std::f64::consts::PI, -1e-12, 6.02214076e23, 0.5f64.powi(30)] {
            let back: f64 = sig(v, 9).parse().unwrap();
            assert!(((back - v) / v).abs() < 1e-8);
        }
    }
}
