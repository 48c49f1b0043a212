use crate::error::Result;
use crate::field::AxisymField;

/// Orthonormal cylindrical basis at a Cartesian point `(x1, x2, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylindricalFrame {
    pub r: f64,
    pub e_r: [f64; 3],
    pub e_theta: [f64; 3],
    pub e_z: [f64; 3],
}

impl CylindricalFrame {
    /// On the axis the azimuth is undefined; the frame aligned with `x1` is used.
    pub fn at(x: [f64; 3]) -> Self {
        let r = x[0].hypot(x[1]);
        let (c, s) = if r > 0.0 { (x[0] / r, x[1] / r) } else { (1.0, 0.0) };
        CylindricalFrame {
            r,
            e_r: [c, s, 0.0],
            e_theta: [-s, c, 0.0],
            e_z: [0.0, 0.0, 1.0],
        }
    }

    pub fn to_cartesian(&self, [vr, vt, vz]: [f64; 3]) -> [f64; 3] {
        [
            vr * self.e_r[0] + vt * self.e_theta[0],
            vr * self.e_r[1] + vt * self.e_theta[1],
            vz,
        ]
    }

    pub fn to_cylindrical(&self, v: [f64; 3]) -> [f64; 3] {
        [dot(v, self.e_r), dot(v, self.e_theta), v[2]]
    }
}

#[inline]
pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Cartesian velocity at a 3D point from bilinear interpolation in `(r, z)`.
pub fn reconstruct_cartesian(field: &AxisymField, x: [f64; 3]) -> Result<[f64; 3]> {
    let frame = CylindricalFrame::at(x);
    let v = field.interpolate(frame.r, x[2])?;
    if frame.r == 0.0 {
        return Ok([0.0, 0.0, v[2]]);
    }
    Ok(frame.to_cartesian(v))
}
