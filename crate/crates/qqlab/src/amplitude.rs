//! Complex amplitude type and its serialized form.

use num_complex::Complex64;

/// Complex amplitude in rectangular form. Phases are computed on demand
/// with `arg()` (two-argument arctangent), never stored.
pub type Amplitude = Complex64;

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;
pub const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Serde adapter storing a complex number as a `[re, im]` pair.
pub mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// True when both components are finite.
pub fn is_finite(z: Amplitude) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
