//! Text formatting of floating-point values.

use core::fmt::{self, Write};

/// Shortest round-trip decimal, switching to exponent form for very large
/// or small magnitudes.
#[derive(Clone, Copy, Debug)]
pub struct Float(pub f64);

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.0;
        let a = x.abs();
        if x == 0.0 {
            f.write_char('0')
        } else if !x.is_finite() || (1e-5..1e16).contains(&a) {
            write!(f, "{x}")
        } else {
            write!(f, "{x:e}")
        }
    }
}

pub struct FloatList<'a>(pub &'a [f64]);

impl fmt::Display for FloatList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_char(';')?;
            }
            write!(f, "{}", Float(*v))?;
        }
        Ok(())
    }
}
