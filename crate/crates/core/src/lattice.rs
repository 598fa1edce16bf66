//! Integer lattice sites and exact vector geometry.
//!
//! A [`Site`] is a point of `Z^d` stored inline for up to [`MAX_DIM`]
//! dimensions. Sites double as displacement vectors and as integer
//! directions; all inner products and norms are computed exactly.

use std::fmt;

use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Maximum supported lattice dimension.
pub const MAX_DIM: usize = 8;

/// A site of `Z^d` (also used for displacements and integer directions).
///
/// Ordering is lexicographic on the coordinates, which gives every sparse
/// map over sites a canonical iteration order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    coords: [i32; MAX_DIM],
    dim: u8,
}

impl Site {
    /// Builds a site from its coordinates.
    ///
    /// Panics if `coords` is empty or longer than [`MAX_DIM`]; configuration
    /// validation rejects such dimensions before any site is constructed.
    pub fn new(coords: &[i32]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "site dimension must be in 1..={MAX_DIM}, got {}",
            coords.len()
        );
        let mut c = [0i32; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Site {
            coords: c,
            dim: coords.len() as u8,
        }
    }

    /// The origin of `Z^d`.
    pub fn origin(dim: usize) -> Self {
        Site::new(&vec![0; dim])
    }

    /// The unit vector `e_axis` of `Z^d`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        assert!(axis < dim);
        let mut c = vec![0; dim];
        c[axis] = 1;
        Site::new(&c)
    }

    /// The site `(n, 0, ..., 0)`.
    pub fn along_first_axis(dim: usize, n: i32) -> Self {
        let mut c = vec![0; dim];
        c[0] = n;
        Site::new(&c)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    pub fn is_origin(&self) -> bool {
        self.coords().iter().all(|&c| c == 0)
    }

    /// Coordinate-wise translation, `None` on i32 overflow.
    pub fn translate(&self, by: &Site) -> Option<Site> {
        debug_assert_eq!(self.dim, by.dim);
        let mut c = [0i32; MAX_DIM];
        for i in 0..self.dim as usize {
            c[i] = self.coords[i].checked_add(by.coords[i])?;
        }
        Some(Site {
            coords: c,
            dim: self.dim,
        })
    }

    /// Exact scalar product `<self, other>`.
    pub fn dot(&self, other: &Site) -> i128 {
        debug_assert_eq!(self.dim, other.dim);
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(&a, &b)| i128::from(a) * i128::from(b))
            .sum()
    }

    /// Scalar multiple `k * self`. Panics on i32 overflow.
    pub fn scale(&self, k: i32) -> Site {
        let c: Vec<i32> = self
            .coords()
            .iter()
            .map(|&a| a.checked_mul(k).expect("coordinate overflow in scale"))
            .collect();
        Site::new(&c)
    }

    /// Squared Euclidean norm, exact.
    pub fn norm2_sq(&self) -> u128 {
        self.coords()
            .iter()
            .map(|&a| (i128::from(a) * i128::from(a)) as u128)
            .sum()
    }

    /// Euclidean norm.
    pub fn norm2(&self) -> f64 {
        (self.norm2_sq() as f64).sqrt()
    }

    /// Max-norm (ℓ∞) distance from the origin.
    pub fn norm_linf(&self) -> u64 {
        self.coords()
            .iter()
            .map(|&a| i64::from(a).unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// The 2d nearest neighbors of the origin in dimension `dim`.
    pub fn unit_neighbors(dim: usize) -> Vec<Site> {
        let mut out = Vec::with_capacity(2 * dim);
        for axis in 0..dim {
            for sign in [1, -1] {
                let mut c = vec![0; dim];
                c[axis] = sign;
                out.push(Site::new(&c));
            }
        }
        out
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Site {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim()))?;
        for c in self.coords() {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SiteVisitor;
        impl<'de> Visitor<'de> for SiteVisitor {
            type Value = Site;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "an integer coordinate array of length 1..={MAX_DIM}")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Site, A::Error> {
                let mut coords = Vec::new();
                while let Some(c) = seq.next_element::<i32>()? {
                    if coords.len() == MAX_DIM {
                        return Err(serde::de::Error::invalid_length(
                            MAX_DIM + 1,
                            &format!("at most {MAX_DIM} coordinates").as_str(),
                        ));
                    }
                    coords.push(c);
                }
                if coords.is_empty() {
                    return Err(serde::de::Error::invalid_length(0, &"at least 1 coordinate"));
                }
                Ok(Site::new(&coords))
            }
        }
        deserializer.deserialize_seq(SiteVisitor)
    }
}
