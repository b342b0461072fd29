//! Embedded/compact coordinate maps.
//!
//! The compact domain is produced by an unfolding process: starting from a
//! single cell, each level places `k` copies of the previous compact block
//! side by side, alternating between the x axis (even level index `mu`) and
//! the y axis (odd `mu`). The per-level strides are the `tau` offsets, and a
//! cell's compact coordinate is the stride-weighted sum of its per-level
//! replica IDs:
//!
//! ```text
//! nu_x(e) = sum_mu tau_x(k, mu) * H(e, mu)
//! nu_y(e) = sum_mu tau_y(k, mu) * H(e, mu)
//! ```
//!
//! `lambda` inverts this by reading the base-`k` digits of the compact
//! coordinate back into replica positions. All arithmetic is exact integer.

use std::fmt;
use std::str::FromStr;

use crate::descriptor::FractalDescriptor;
use crate::error::{Error, Result};
use crate::geometry::{self, parse_pair, EmbeddedCoord};

/// Coordinate in the `w x h` compact domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompactCoord {
    pub x: u64,
    pub y: u64,
}

impl CompactCoord {
    pub const fn new(x: u64, y: u64) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for CompactCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

impl FromStr for CompactCoord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_pair(s).map(|(x, y)| Self { x, y })
    }
}

/// Compact-layout offset of level `mu`: `k^floor(mu/2)` along x for even `mu`,
/// along y for odd `mu`.
///
/// Panics if the stride overflows `u64`, which cannot happen for any level
/// accepted by [`geometry::side`].
pub fn tau(k: u64, mu: u32) -> (u64, u64) {
    let stride = k.checked_pow(mu / 2).expect("tau stride overflows u64");
    if mu.is_multiple_of(2) {
        (stride, 0)
    } else {
        (0, stride)
    }
}

/// Compact domain size `(k^ceil(r/2), k^floor(r/2))`.
pub fn compact_dims(desc: &FractalDescriptor, r: u32) -> Result<(u64, u64)> {
    geometry::side(desc, r)?;
    let k = desc.k();
    Ok((k.pow(r.div_ceil(2)), k.pow(r / 2)))
}

/// Replica ID of the level-`mu` sub-box containing `e`, by descriptor lookup.
pub fn replica_id(desc: &FractalDescriptor, e: EmbeddedCoord, mu: u32) -> Result<u32> {
    let s = desc.s();
    let scale = s.checked_pow(mu);
    let (gx, gy) = match scale {
        Some(p) => ((e.x / p) % s, (e.y / p) % s),
        // Beyond the representable range every digit is zero.
        None => (0, 0),
    };
    desc.replica_at(gx, gy)
        .ok_or(Error::NotInFractal { x: e.x, y: e.y })
}

/// Bitwise replica ID for the canonical triangle `[(0,0), (1,0), (0,1)]`.
///
/// Returns 3 for the empty quadrant, which is not a valid ID.
#[inline]
pub fn triangle_replica_id(x: u64, y: u64, mu: u32) -> u32 {
    (((x >> mu) & 1) + 2 * ((y >> mu) & 1)) as u32
}

/// Precomputed per-level tables for one `(descriptor, level)` pair.
///
/// The free functions [`nu`] and [`lambda`] build one of these per call; hot
/// loops should build it once and reuse it.
#[derive(Debug, Clone)]
pub struct FractalMap {
    desc: FractalDescriptor,
    level: u32,
    n: u64,
    w: u64,
    h: u64,
    cells: u64,
    pow_s: Vec<u64>,
    tau_x: Vec<u64>,
    tau_y: Vec<u64>,
    /// `log2(s)` when `s` is a power of two.
    s_shift: Option<u32>,
}

impl FractalMap {
    pub fn new(desc: &FractalDescriptor, r: u32) -> Result<Self> {
        let n = geometry::side(desc, r)?;
        let cells = geometry::cell_count(desc, r)?;
        let (w, h) = compact_dims(desc, r)?;
        let s = desc.s();
        let pow_s = (0..r).map(|mu| s.pow(mu)).collect();
        let (tau_x, tau_y) = (0..r).map(|mu| tau(desc.k(), mu)).unzip();
        Ok(Self {
            desc: desc.clone(),
            level: r,
            n,
            w,
            h,
            cells,
            pow_s,
            tau_x,
            tau_y,
            s_shift: s.is_power_of_two().then(|| s.trailing_zeros()),
        })
    }

    pub fn descriptor(&self) -> &FractalDescriptor {
        &self.desc
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Embedded side `n = s^r`.
    pub fn side(&self) -> u64 {
        self.n
    }

    pub fn compact_dims(&self) -> (u64, u64) {
        (self.w, self.h)
    }

    /// `k^r`.
    pub fn cell_count(&self) -> u64 {
        self.cells
    }

    pub fn tau_table(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.tau_x.iter().copied().zip(self.tau_y.iter().copied())
    }

    #[inline]
    fn check_embedded(&self, e: EmbeddedCoord) -> Result<()> {
        if e.x >= self.n || e.y >= self.n {
            return Err(Error::EmbeddedOutOfRange {
                x: e.x,
                y: e.y,
                n: self.n,
            });
        }
        Ok(())
    }

    #[inline]
    fn check_compact(&self, c: CompactCoord) -> Result<()> {
        if c.x >= self.w || c.y >= self.h {
            return Err(Error::CompactOutOfRange {
                x: c.x,
                y: c.y,
                w: self.w,
                h: self.h,
            });
        }
        Ok(())
    }

    pub fn contains(&self, e: EmbeddedCoord) -> Result<bool> {
        self.check_embedded(e)?;
        Ok(self.try_nu(e).is_some())
    }

    /// Per-level replica IDs of `e`, least significant level first.
    pub fn replica_ids(&self, e: EmbeddedCoord) -> Result<Vec<u32>> {
        self.check_embedded(e)?;
        let s = self.desc.s();
        (0..self.level as usize)
            .map(|mu| {
                let p = self.pow_s[mu];
                self.desc
                    .replica_at((e.x / p) % s, (e.y / p) % s)
                    .ok_or(Error::NotInFractal { x: e.x, y: e.y })
            })
            .collect()
    }

    /// ν: embedded to compact. Fails outside the domain or the fractal.
    pub fn nu(&self, e: EmbeddedCoord) -> Result<CompactCoord> {
        self.check_embedded(e)?;
        self.try_nu(e).ok_or(Error::NotInFractal { x: e.x, y: e.y })
    }

    /// ν for an in-range coordinate; `None` when `e` is not a fractal cell.
    #[inline]
    pub fn try_nu(&self, e: EmbeddedCoord) -> Option<CompactCoord> {
        self.nu_counted(e).map(|(c, _)| c)
    }

    #[inline]
    fn nu_counted(&self, e: EmbeddedCoord) -> Option<(CompactCoord, u32)> {
        match self.s_shift {
            Some(shift) => {
                let mask = (1u64 << shift) - 1;
                self.nu_digits(e, |v| v & mask, |v| v >> shift)
            }
            None => {
                let s = self.desc.s();
                self.nu_digits(e, |v| v % s, |v| v / s)
            }
        }
    }

    #[inline(always)]
    fn nu_digits(
        &self,
        e: EmbeddedCoord,
        digit: impl Fn(u64) -> u64,
        shift: impl Fn(u64) -> u64,
    ) -> Option<(CompactCoord, u32)> {
        let (mut x, mut y) = (e.x, e.y);
        let (mut cx, mut cy) = (0u64, 0u64);
        let mut visited = 0;
        for mu in 0..self.level as usize {
            visited += 1;
            let id = self.desc.replica_at(digit(x), digit(y))? as u64;
            cx += self.tau_x[mu] * id;
            cy += self.tau_y[mu] * id;
            x = shift(x);
            y = shift(y);
        }
        Some((CompactCoord { x: cx, y: cy }, visited))
    }

    /// ν of `nb` given `c = ν(e)` for a fractal cell `e`.
    ///
    /// Only the levels below the first shared digit prefix of `e` and `nb`
    /// are recomputed, so adjacent cells cost a few levels on average.
    /// `None` when `nb` is not a fractal cell. Both coordinates must be in
    /// range.
    #[inline]
    pub fn nu_from(
        &self,
        e: EmbeddedCoord,
        c: CompactCoord,
        nb: EmbeddedCoord,
    ) -> Option<CompactCoord> {
        match self.s_shift {
            Some(shift) => {
                let mask = (1u64 << shift) - 1;
                self.nu_from_digits(e, c, nb, |v| v & mask, |v| v >> shift)
            }
            None => {
                let s = self.desc.s();
                self.nu_from_digits(e, c, nb, |v| v % s, |v| v / s)
            }
        }
    }

    #[inline(always)]
    fn nu_from_digits(
        &self,
        e: EmbeddedCoord,
        c: CompactCoord,
        nb: EmbeddedCoord,
        digit: impl Fn(u64) -> u64,
        shift: impl Fn(u64) -> u64,
    ) -> Option<CompactCoord> {
        let (mut x, mut y, mut nx, mut ny) = (e.x, e.y, nb.x, nb.y);
        let (mut cx, mut cy) = (c.x, c.y);
        let mut mu = 0;
        while x != nx || y != ny {
            let old = self.desc.replica_at(digit(x), digit(y))? as u64;
            let new = self.desc.replica_at(digit(nx), digit(ny))? as u64;
            cx = cx + self.tau_x[mu] * new - self.tau_x[mu] * old;
            cy = cy + self.tau_y[mu] * new - self.tau_y[mu] * old;
            x = shift(x);
            y = shift(y);
            nx = shift(nx);
            ny = shift(ny);
            mu += 1;
        }
        Some(CompactCoord { x: cx, y: cy })
    }

    /// ν using a caller-supplied replica-ID function `h(x, y, mu)`.
    ///
    /// Used to evaluate alternative numberings against the oracle; returns
    /// `None` when `h` rejects a level or yields an ID `>= k`.
    pub fn nu_with<H>(&self, e: EmbeddedCoord, h: H) -> Option<CompactCoord>
    where
        H: Fn(u64, u64, u32) -> Option<u32>,
    {
        let (mut cx, mut cy) = (0u64, 0u64);
        for mu in 0..self.level {
            let id = h(e.x, e.y, mu)? as u64;
            if id >= self.desc.k() {
                return None;
            }
            cx += self.tau_x[mu as usize] * id;
            cy += self.tau_y[mu as usize] * id;
        }
        Some(CompactCoord { x: cx, y: cy })
    }

    /// ν that also reports how many levels the loop visited.
    pub fn nu_traced(&self, e: EmbeddedCoord) -> Result<(CompactCoord, u32)> {
        self.check_embedded(e)?;
        self.nu_counted(e)
            .ok_or(Error::NotInFractal { x: e.x, y: e.y })
    }

    /// λ: compact to embedded. Fails outside the compact rectangle.
    pub fn lambda(&self, c: CompactCoord) -> Result<EmbeddedCoord> {
        self.check_compact(c)?;
        Ok(self.lambda_unchecked(c))
    }

    /// λ for an in-range coordinate.
    #[inline]
    pub fn lambda_unchecked(&self, c: CompactCoord) -> EmbeddedCoord {
        self.lambda_counted(c).0
    }

    /// λ that also reports how many levels the loop visited.
    pub fn lambda_traced(&self, c: CompactCoord) -> Result<(EmbeddedCoord, u32)> {
        self.check_compact(c)?;
        Ok(self.lambda_counted(c))
    }

    #[inline]
    fn lambda_counted(&self, c: CompactCoord) -> (EmbeddedCoord, u32) {
        let k = self.desc.k();
        let replicas = self.desc.replicas();
        // Even levels consume base-k digits of cx, odd levels those of cy.
        let (mut cx, mut cy) = (c.x, c.y);
        let (mut x, mut y) = (0u64, 0u64);
        let mut visited = 0;
        for mu in 0..self.level as usize {
            visited += 1;
            let src = if mu % 2 == 0 { &mut cx } else { &mut cy };
            let d = (*src % k) as usize;
            *src /= k;
            let pos = replicas[d];
            x += pos.gx * self.pow_s[mu];
            y += pos.gy * self.pow_s[mu];
        }
        (EmbeddedCoord { x, y }, visited)
    }

    /// λ of `nc` given `e = λ(c)`; only the differing low digits of the
    /// compact coordinates are revisited.
    #[inline]
    pub fn lambda_from(
        &self,
        c: CompactCoord,
        e: EmbeddedCoord,
        nc: CompactCoord,
    ) -> EmbeddedCoord {
        let k = self.desc.k();
        let replicas = self.desc.replicas();
        let (mut x, mut y) = (e.x, e.y);
        for (parity, (mut a, mut b)) in [(0, (c.x, nc.x)), (1, (c.y, nc.y))] {
            let mut mu = parity;
            while a != b {
                let old = replicas[(a % k) as usize];
                let new = replicas[(b % k) as usize];
                let p = self.pow_s[mu];
                x = x + new.gx * p - old.gx * p;
                y = y + new.gy * p - old.gy * p;
                a /= k;
                b /= k;
                mu += 2;
            }
        }
        EmbeddedCoord { x, y }
    }

    /// Row-major index of a compact coordinate.
    #[inline]
    pub fn compact_index(&self, c: CompactCoord) -> u64 {
        c.y * self.w + c.x
    }

    #[inline]
    pub fn compact_coord(&self, index: u64) -> CompactCoord {
        CompactCoord {
            x: index % self.w,
            y: index / self.w,
        }
    }

    /// Matrix encoding of ν for `e`.
    pub fn map_matrices(&self, e: EmbeddedCoord) -> Result<MapMatrices> {
        let ids = self.replica_ids(e)?;
        let side = (self.level as usize).max(MIN_FRAGMENT_SIDE);
        let mut a = Matrix::zeros(side, side);
        let mut b = Matrix::zeros(side, side);
        for (mu, (tx, ty)) in self.tau_table().enumerate() {
            a.set(0, mu, tx);
            a.set(1, mu, ty);
            b.set(mu, 0, ids[mu] as u64);
        }
        Ok(MapMatrices { a, b })
    }

    /// ν computed as `A * B` through an MMA kernel.
    pub fn nu_via_mma(&self, e: EmbeddedCoord, kernel: &dyn MmaKernel) -> Result<CompactCoord> {
        let m = self.map_matrices(e)?;
        let acc = Matrix::zeros(m.a.rows(), m.b.cols());
        let d = kernel.mma(&m.a, &m.b, &acc)?;
        Ok(CompactCoord {
            x: d.get(0, 0),
            y: d.get(1, 0),
        })
    }
}

/// ν: embedded coordinate to compact coordinate at level `r`.
pub fn nu(desc: &FractalDescriptor, r: u32, e: EmbeddedCoord) -> Result<CompactCoord> {
    FractalMap::new(desc, r)?.nu(e)
}

/// λ: compact coordinate to embedded coordinate at level `r`.
pub fn lambda(desc: &FractalDescriptor, r: u32, c: CompactCoord) -> Result<EmbeddedCoord> {
    FractalMap::new(desc, r)?.lambda(c)
}

pub fn build_map_matrices(
    desc: &FractalDescriptor,
    r: u32,
    e: EmbeddedCoord,
) -> Result<MapMatrices> {
    FractalMap::new(desc, r)?.map_matrices(e)
}

pub fn nu_via_mma(desc: &FractalDescriptor, r: u32, e: EmbeddedCoord) -> Result<CompactCoord> {
    FractalMap::new(desc, r)?.nu_via_mma(e, &ScalarMma)
}

/// Side of the hardware fragment the encoding is padded to.
pub const MIN_FRAGMENT_SIDE: usize = 16;

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u64) {
        self.data[row * self.cols + col] = value;
    }
}

/// The `A` (strides) and `B` (replica IDs) operands of the ν product.
///
/// `A` row 0 holds `tau_x(k, 0..r)`, row 1 holds `tau_y(k, 0..r)`; `B` column 0
/// holds `H(e, 0..r)`. Both are zero-padded to a square of side `max(16, r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapMatrices {
    pub a: Matrix,
    pub b: Matrix,
}

/// Matrix-multiply-accumulate `D = A * B + C`.
pub trait MmaKernel {
    fn mma(&self, a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix>;
}

/// Exact scalar reference kernel.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarMma;

impl MmaKernel for ScalarMma {
    fn mma(&self, a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix> {
        if a.cols != b.rows || c.rows != a.rows || c.cols != b.cols {
            return Err(Error::ShapeMismatch(format!(
                "A {}x{}, B {}x{}, C {}x{}",
                a.rows, a.cols, b.rows, b.cols, c.rows, c.cols
            )));
        }
        let mut d = c.clone();
        for i in 0..a.rows {
            for p in 0..a.cols {
                let lhs = a.get(i, p);
                if lhs == 0 {
                    continue;
                }
                for j in 0..b.cols {
                    let prod = lhs.checked_mul(b.get(p, j)).ok_or(Error::MmaOverflow)?;
                    let slot = &mut d.data[i * d.cols + j];
                    *slot = slot.checked_add(prod).ok_or(Error::MmaOverflow)?;
                }
            }
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> FractalDescriptor {
        FractalDescriptor::sierpinski_triangle()
    }

    fn e(x: u64, y: u64) -> EmbeddedCoord {
        EmbeddedCoord::new(x, y)
    }

    fn c(x: u64, y: u64) -> CompactCoord {
        CompactCoord::new(x, y)
    }

    #[test]
    fn incremental_lambda_matches_full() {
        for desc in [
            FractalDescriptor::sierpinski_triangle(),
            FractalDescriptor::sierpinski_carpet(),
            FractalDescriptor::vicsek(),
        ] {
            for r in 0..5 {
                let map = FractalMap::new(&desc, r).unwrap();
                let mut prev = map.compact_coord(0);
                let mut e = map.lambda_unchecked(prev);
                for i in 1..map.cell_count() {
                    let c = map.compact_coord(i);
                    e = map.lambda_from(prev, e, c);
                    assert_eq!(e, map.lambda_unchecked(c));
                    prev = c;
                }
            }
        }
    }

    #[test]
    fn incremental_nu_matches_full() {
        for desc in [
            FractalDescriptor::sierpinski_triangle(),
            FractalDescriptor::sierpinski_carpet(),
            FractalDescriptor::vicsek(),
        ] {
            let map = FractalMap::new(&desc, 4).unwrap();
            let n = map.side();
            for e in crate::geometry::enumerate_cells(&desc, 4).unwrap() {
                let c = map.try_nu(e).unwrap();
                for dy in -2..=2 {
                    for dx in -2..=2 {
                        if let Some(nb) = e.offset(dx, dy, n) {
                            assert_eq!(map.nu_from(e, c, nb), map.try_nu(nb), "{e} -> {nb}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn replica_id_examples() {
        assert_eq!(replica_id(&tri(), e(3, 0), 0).unwrap(), 1);
        assert_eq!(replica_id(&tri(), e(0, 3), 1).unwrap(), 2);
        let carpet = FractalDescriptor::sierpinski_carpet();
        assert_eq!(replica_id(&carpet, e(1, 2), 0).unwrap(), 6);
        assert_eq!(
            replica_id(&tri(), e(3, 3), 0).unwrap_err(),
            Error::NotInFractal { x: 3, y: 3 }
        );
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau(3, 0), (1, 0));
        assert_eq!(tau(3, 1), (0, 1));
        assert_eq!(tau(3, 2), (3, 0));
        assert_eq!(tau(3, 3), (0, 3));
        assert_eq!(tau(3, 4), (9, 0));
    }

    #[test]
    fn dims_examples() {
        assert_eq!(compact_dims(&tri(), 0).unwrap(), (1, 1));
        assert_eq!(compact_dims(&tri(), 3).unwrap(), (9, 3));
        assert_eq!(
            compact_dims(&FractalDescriptor::sierpinski_carpet(), 2).unwrap(),
            (8, 8)
        );
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu(&tri(), 2, e(0, 0)).unwrap(), c(0, 0));
        assert_eq!(nu(&tri(), 2, e(0, 3)).unwrap(), c(2, 2));
        assert_eq!(nu(&tri(), 3, e(5, 2)).unwrap(), c(4, 2));
        let carpet = FractalDescriptor::sierpinski_carpet();
        assert_eq!(nu(&carpet, 1, e(2, 1)).unwrap(), c(4, 0));
    }

    #[test]
    fn nu_rejects_holes_and_out_of_range() {
        assert_eq!(
            nu(&tri(), 2, e(2, 2)).unwrap_err(),
            Error::NotInFractal { x: 2, y: 2 }
        );
        assert!(matches!(
            nu(&tri(), 2, e(0, 4)),
            Err(Error::EmbeddedOutOfRange { .. })
        ));
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda(&tri(), 0, c(0, 0)).unwrap(), e(0, 0));
        assert_eq!(lambda(&tri(), 3, c(4, 2)).unwrap(), e(5, 2));
        assert_eq!(lambda(&tri(), 2, c(2, 2)).unwrap(), e(0, 3));
        assert_eq!(
            lambda(&tri(), 2, c(3, 0)).unwrap_err(),
            Error::CompactOutOfRange {
                x: 3,
                y: 0,
                w: 3,
                h: 3
            }
        );
    }

    #[test]
    fn matrices_single_level() {
        let m = build_map_matrices(&tri(), 1, e(1, 0)).unwrap();
        assert_eq!((m.a.rows(), m.a.cols()), (16, 16));
        assert_eq!(m.a.get(0, 0), 1);
        assert_eq!(m.a.get(1, 0), 0);
        assert_eq!(m.b.get(0, 0), 1);
        let nonzero_a = m.a.data.iter().filter(|&&v| v != 0).count();
        let nonzero_b = m.b.data.iter().filter(|&&v| v != 0).count();
        assert_eq!((nonzero_a, nonzero_b), (1, 1));
    }

    #[test]
    fn matrices_two_levels() {
        let m = build_map_matrices(&tri(), 2, e(0, 3)).unwrap();
        assert_eq!([m.a.get(0, 0), m.a.get(0, 1)], [1, 0]);
        assert_eq!([m.a.get(1, 0), m.a.get(1, 1)], [0, 1]);
        assert_eq!([m.b.get(0, 0), m.b.get(1, 0)], [2, 2]);
        for row in 0..16 {
            for col in 0..16 {
                let in_a = row < 2 && col < 2;
                let in_b = row < 2 && col == 0;
                if !in_a {
                    assert_eq!(m.a.get(row, col), 0);
                }
                if !in_b {
                    assert_eq!(m.b.get(row, col), 0);
                }
            }
        }
    }

    #[test]
    fn fragment_grows_past_sixteen_levels() {
        let m = build_map_matrices(&tri(), 20, e(0, 0)).unwrap();
        assert_eq!((m.a.rows(), m.b.cols()), (20, 20));
    }

    #[test]
    fn mma_examples() {
        assert_eq!(nu_via_mma(&tri(), 2, e(0, 3)).unwrap(), c(2, 2));
        assert_eq!(nu_via_mma(&tri(), 2, e(0, 0)).unwrap(), c(0, 0));
        assert_eq!(nu_via_mma(&tri(), 3, e(5, 2)).unwrap(), c(4, 2));
        assert!(matches!(
            nu_via_mma(&tri(), 2, e(3, 3)),
            Err(Error::NotInFractal { .. })
        ));
    }

    #[test]
    fn mma_accumulates_and_checks_shapes() {
        let mut a = Matrix::zeros(2, 3);
        let mut b = Matrix::zeros(3, 2);
        let mut acc = Matrix::zeros(2, 2);
        for (i, v) in [1, 2, 3, 4, 5, 6].into_iter().enumerate() {
            a.data[i] = v;
            b.data[i] = v + 6;
        }
        acc.data = vec![1, 1, 1, 1];
        let d = ScalarMma.mma(&a, &b, &acc).unwrap();
        // [1 2 3; 4 5 6] * [7 8; 9 10; 11 12] + 1
        assert_eq!(d.data, vec![59, 65, 140, 155]);
        assert!(matches!(
            ScalarMma.mma(&a, &a, &acc),
            Err(Error::ShapeMismatch(_))
        ));
        let mut big = Matrix::zeros(1, 1);
        big.data[0] = u64::MAX;
        assert_eq!(
            ScalarMma.mma(&big, &big, &Matrix::zeros(1, 1)).unwrap_err(),
            Error::MmaOverflow
        );
    }

    #[test]
    fn triangle_fast_path_matches_lookup() {
        let d = tri();
        let map = FractalMap::new(&d, 6).unwrap();
        for cell in geometry::enumerate_cells(&d, 6).unwrap() {
            let ids = map.replica_ids(cell).unwrap();
            for (mu, id) in ids.into_iter().enumerate() {
                assert_eq!(triangle_replica_id(cell.x, cell.y, mu as u32), id);
            }
        }
    }

    #[test]
    fn traced_maps_visit_every_level_once() {
        let d = tri();
        let map = FractalMap::new(&d, 7).unwrap();
        let (cc, levels) = map.nu_traced(e(5, 2)).unwrap();
        assert_eq!(levels, 7);
        assert_eq!(map.lambda_traced(cc).unwrap(), (e(5, 2), 7));
    }
}
