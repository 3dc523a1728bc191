//! Transmission-mode codebook, tile responses and per-tile, per-mode
//! channel vectors.
//!
//! Channel vectors follow the convention that the received baseband
//! sample is `h^H x`, so quadratic forms read `h^H W h`. Tile index 0 is
//! the direct BS-receiver link; tiles `1..=T` are the IRS tiles.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::config::ScenarioConfig;
use crate::scenario::{Link, ScenarioInstance};
use crate::CoreError;

/// Complex baseband vector of length `N_T`.
pub type CVector = DVector<Complex64>;

/// ULA response `exp(j 2 pi spacing n cosine)`, `n = 0..num_antennas`.
pub fn array_response(num_antennas: usize, spacing_wavelengths: f64, direction_cosine: f64) -> Result<CVector, CoreError> {
    if !(direction_cosine.abs() <= 1.0) {
        return Err(CoreError::InvalidArgument(format!(
            "direction cosine {direction_cosine} outside [-1, 1]"
        )));
    }
    Ok(DVector::from_fn(num_antennas, |n, _| {
        Complex64::from_polar(1.0, 2.0 * PI * spacing_wavelengths * n as f64 * direction_cosine)
    }))
}

/// One offline phase configuration of a tile: a linear phase gradient
/// that steers energy in direction-cosine space, plus a constant offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionMode {
    pub gradient_u: f64,
    pub gradient_v: f64,
    pub wavefront_offset: f64,
    pub index: usize,
}

/// Uniform `g x g` gradient grid on `[-1, 1]^2` times the offsets.
/// Mode index runs over offsets fastest, then `v`, then `u`.
pub fn build_codebook(reflection_grid_size: usize, offsets: &[f64]) -> Result<Vec<TransmissionMode>, CoreError> {
    let g = (reflection_grid_size as f64).sqrt().round() as usize;
    if g == 0 || g * g != reflection_grid_size {
        return Err(CoreError::InvalidArgument(format!(
            "reflection grid size {reflection_grid_size} is not a perfect square"
        )));
    }
    if offsets.is_empty() {
        return Err(CoreError::InvalidArgument("no wavefront offsets".into()));
    }
    let level = |i: usize| if g == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (g - 1) as f64 };
    let mut modes = Vec::with_capacity(reflection_grid_size * offsets.len());
    for iu in 0..g {
        for iv in 0..g {
            for &off in offsets {
                modes.push(TransmissionMode {
                    gradient_u: level(iu),
                    gradient_v: level(iv),
                    wavefront_offset: off,
                    index: modes.len(),
                });
            }
        }
    }
    Ok(modes)
}

/// A rectangular tile of `qx * qy` unit cells. Cell coordinates are in
/// units of the element spacing, measured from the IRS center, so tiles
/// at different places on the surface see different phase progressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileGeometry {
    pub qx: usize,
    pub qy: usize,
    /// Coordinate of the first cell along x and y.
    pub x0: f64,
    pub y0: f64,
    pub spacing_wavelengths: f64,
    /// Unit-cell reflection amplitude.
    pub cell_gain: f64,
}

impl TileGeometry {
    /// A single tile centered at the origin.
    pub fn centered(qx: usize, qy: usize, spacing_wavelengths: f64) -> Self {
        Self {
            qx,
            qy,
            x0: -(qx as f64 - 1.0) / 2.0,
            y0: -(qy as f64 - 1.0) / 2.0,
            spacing_wavelengths,
            cell_gain: 1.0,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.qx * self.qy
    }
}

/// Splits `a` into `p * q = a` with `p >= q` and `q` as large as possible.
fn squarest_factors(a: usize) -> (usize, usize) {
    let mut q = (a as f64).sqrt() as usize;
    while q > 1 && a % q != 0 {
        q -= 1;
    }
    let q = q.max(1);
    (a / q, q)
}

/// Geometry of every tile: the surface is `qx` cells wide and the tiles
/// are stacked along y.
pub fn tile_layout(num_elements: usize, num_tiles: usize, spacing_wavelengths: f64) -> Vec<TileGeometry> {
    let (qx, qy) = squarest_factors(num_elements / num_tiles);
    let rows = (qy * num_tiles) as f64;
    (0..num_tiles)
        .map(|t| TileGeometry {
            qx,
            qy,
            x0: -(qx as f64 - 1.0) / 2.0,
            y0: (t * qy) as f64 - (rows - 1.0) / 2.0,
            spacing_wavelengths,
            cell_gain: 1.0,
        })
        .collect()
}

fn line_sum(n: usize, start: f64, phase_step: f64) -> Complex64 {
    (0..n)
        .map(|i| Complex64::from_polar(1.0, phase_step * (start + i as f64)))
        .sum()
}

fn check_unit(d: &[f64; 3]) -> Result<(), CoreError> {
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(CoreError::InvalidArgument(format!("direction {d:?} is not a unit vector")));
    }
    Ok(())
}

/// Far-field response of a tile for one incident and one outgoing
/// direction (unit vectors in the IRS frame; x and y components are the
/// direction cosines).
pub fn tile_response(
    tile: &TileGeometry,
    mode: &TransmissionMode,
    in_direction: &[f64; 3],
    out_direction: &[f64; 3],
) -> Result<Complex64, CoreError> {
    check_unit(in_direction)?;
    check_unit(out_direction)?;
    Ok(tile_response_cos(
        tile,
        mode,
        in_direction[0] + out_direction[0],
        in_direction[1] + out_direction[1],
    ))
}

/// Same as [`tile_response`] given the summed direction cosines.
pub fn tile_response_cos(tile: &TileGeometry, mode: &TransmissionMode, du: f64, dv: f64) -> Complex64 {
    let kd = 2.0 * PI * tile.spacing_wavelengths;
    // the sum over the grid factorizes into one sum per axis
    let sx = line_sum(tile.qx, tile.x0, kd * (du - mode.gradient_u));
    let sy = line_sum(tile.qy, tile.y0, kd * (dv - mode.gradient_v));
    sx * sy * Complex64::from_polar(tile.cell_gain, mode.wavefront_offset)
}

/// Receiver class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RxKind {
    Ir,
    Er,
}

impl RxKind {
    fn code(self) -> &'static str {
        match self {
            RxKind::Ir => "IR",
            RxKind::Er => "ER",
        }
    }
}

/// Channel vectors `h[kind][i][s][t]` over a mode list.
///
/// Stored flat; `modes[s]` is the codebook index of local mode `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub num_antennas: usize,
    pub num_irs: usize,
    pub num_ers: usize,
    pub num_tiles: usize,
    pub modes: Vec<usize>,
    /// Direct channel per receiver (IRs first).
    direct: Vec<CVector>,
    /// Reflected channel, index `((rx * S) + s) * T + (t - 1)`.
    reflected: Vec<CVector>,
}

impl ChannelSet {
    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn num_receivers(&self) -> usize {
        self.num_irs + self.num_ers
    }

    /// Flat receiver index (IRs first).
    pub fn rx_index(&self, kind: RxKind, i: usize) -> usize {
        match kind {
            RxKind::Ir => i,
            RxKind::Er => self.num_irs + i,
        }
    }

    /// `h[kind][i][s][t]`; tile 0 is the direct link for every `s`.
    pub fn get(&self, kind: RxKind, i: usize, s: usize, t: usize) -> &CVector {
        self.get_rx(self.rx_index(kind, i), s, t)
    }

    /// As [`ChannelSet::get`] with a flat receiver index.
    pub fn get_rx(&self, rx: usize, s: usize, t: usize) -> &CVector {
        if t == 0 {
            &self.direct[rx]
        } else {
            &self.reflected[(rx * self.modes.len() + s) * self.num_tiles + t - 1]
        }
    }

    pub fn direct(&self, rx: usize) -> &CVector {
        &self.direct[rx]
    }

    /// Sub-codebook with the given local mode indices, in that order.
    pub fn restrict(&self, local: &[usize]) -> ChannelSet {
        let mut reflected = Vec::with_capacity(self.num_receivers() * local.len() * self.num_tiles);
        for rx in 0..self.num_receivers() {
            for &s in local {
                for t in 1..=self.num_tiles {
                    reflected.push(self.get_rx(rx, s, t).clone());
                }
            }
        }
        ChannelSet {
            num_antennas: self.num_antennas,
            num_irs: self.num_irs,
            num_ers: self.num_ers,
            num_tiles: self.num_tiles,
            modes: local.iter().map(|&s| self.modes[s]).collect(),
            direct: self.direct.clone(),
            reflected,
        }
    }

    /// Same receivers with the IRS removed.
    pub fn direct_only(&self) -> ChannelSet {
        ChannelSet {
            num_antennas: self.num_antennas,
            num_irs: self.num_irs,
            num_ers: self.num_ers,
            num_tiles: 0,
            modes: vec![0],
            direct: self.direct.clone(),
            reflected: Vec::new(),
        }
    }

    /// Multiplies every vector by `factor`.
    pub fn scaled(&self, factor: f64) -> ChannelSet {
        let mut out = self.clone();
        for h in out.direct.iter_mut().chain(out.reflected.iter_mut()) {
            *h *= Complex64::new(factor, 0.0);
        }
        out
    }

    /// Text tensor: a header line `channels NT K J T S`, one `modes ...`
    /// line, then one line per vector entry:
    /// `kind i s t n re im` (direct entries use `s = 0, t = 0`).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "channels {} {} {} {} {}",
            self.num_antennas,
            self.num_irs,
            self.num_ers,
            self.num_tiles,
            self.modes.len()
        );
        let _ = writeln!(
            out,
            "modes {}",
            self.modes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ")
        );
        for rx in 0..self.num_receivers() {
            let (kind, i) = if rx < self.num_irs { (RxKind::Ir, rx) } else { (RxKind::Er, rx - self.num_irs) };
            let mut emit = |s: usize, t: usize, h: &CVector| {
                for (n, z) in h.iter().enumerate() {
                    let _ = writeln!(out, "{} {i} {s} {t} {n} {:e} {:e}", kind.code(), z.re, z.im);
                }
            };
            emit(0, 0, &self.direct[rx]);
            for s in 0..self.modes.len() {
                for t in 1..=self.num_tiles {
                    emit(s, t, self.get_rx(rx, s, t));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ChannelSet, CoreError> {
        let err = |line: usize, msg: &str| CoreError::InvalidArgument(format!("channel text line {}: {msg}", line + 1));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (ln, header) = lines.next().ok_or_else(|| err(0, "empty input"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 || h[0] != "channels" {
            return Err(err(ln, "expected `channels NT K J T S`"));
        }
        let num: Vec<usize> = h[1..]
            .iter()
            .map(|v| v.parse().map_err(|_| err(ln, "bad integer")))
            .collect::<Result<_, _>>()?;
        let (nt, k, j, tiles, s_count) = (num[0], num[1], num[2], num[3], num[4]);
        let (ln, mline) = lines.next().ok_or_else(|| err(ln, "missing modes line"))?;
        let mut parts = mline.split_whitespace();
        if parts.next() != Some("modes") {
            return Err(err(ln, "expected `modes ...`"));
        }
        let modes: Vec<usize> = parts
            .map(|v| v.parse().map_err(|_| err(ln, "bad mode index")))
            .collect::<Result<_, _>>()?;
        if modes.len() != s_count {
            return Err(err(ln, "mode count mismatch"));
        }
        let zero = DVector::from_element(nt, Complex64::new(0.0, 0.0));
        let mut set = ChannelSet {
            num_antennas: nt,
            num_irs: k,
            num_ers: j,
            num_tiles: tiles,
            modes,
            direct: vec![zero.clone(); k + j],
            reflected: vec![zero; (k + j) * s_count * tiles],
        };
        let mut seen = vec![false; (k + j) * (1 + s_count * tiles) * nt];
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 7 {
                return Err(err(ln, "expected 7 fields"));
            }
            let rx_base = match f[0] {
                "IR" => 0,
                "ER" => k,
                _ => return Err(err(ln, "unknown receiver kind")),
            };
            let idx: Vec<usize> = f[1..5]
                .iter()
                .map(|v| v.parse().map_err(|_| err(ln, "bad index")))
                .collect::<Result<_, _>>()?;
            let re: f64 = f[5].parse().map_err(|_| err(ln, "bad real part"))?;
            let im: f64 = f[6].parse().map_err(|_| err(ln, "bad imaginary part"))?;
            let (i, s, t, n) = (idx[0], idx[1], idx[2], idx[3]);
            let limit = if rx_base == 0 { k } else { j };
            if i >= limit || s >= s_count.max(1) || t > tiles || n >= nt {
                return Err(err(ln, "index out of range"));
            }
            let rx = rx_base + i;
            let slot = if t == 0 { 0 } else { 1 + s * tiles + t - 1 };
            seen[(rx * (1 + s_count * tiles) + slot) * nt + n] = true;
            let v = if t == 0 {
                &mut set.direct[rx]
            } else {
                &mut set.reflected[(rx * s_count + s) * tiles + t - 1]
            };
            v[n] = Complex64::new(re, im);
        }
        if seen.iter().any(|s| !s) {
            return Err(err(0, "incomplete tensor"));
        }
        Ok(set)
    }
}

/// Row `1^H C D` of a direct link.
fn direct_channel(cfg: &ScenarioConfig, link: &Link) -> Result<CVector, CoreError> {
    let mut row = DVector::from_element(cfg.num_antennas, Complex64::new(0.0, 0.0));
    for (c, ang) in link.coefficients().iter().zip(&link.departure) {
        row += array_response(cfg.num_antennas, cfg.bs_spacing_wavelengths, ang.cosines().0)? * *c;
    }
    Ok(row.map(|z| z.conj()))
}

/// Per-tile, per-mode channels for all receivers over `codebook`.
pub fn synth_channels(
    cfg: &ScenarioConfig,
    instance: &ScenarioInstance,
    codebook: &[TransmissionMode],
) -> Result<ChannelSet, CoreError> {
    let nr = cfg.num_receivers();
    if instance.reflected.len() != nr || instance.direct.len() != nr {
        return Err(CoreError::DimensionMismatch(format!(
            "instance has {} receivers, config expects {nr}",
            instance.reflected.len()
        )));
    }
    let tiles = tile_layout(cfg.num_elements, cfg.num_tiles, cfg.element_spacing_wavelengths);
    let bs_irs = &instance.bs_irs;
    let c_t = bs_irs.coefficients();
    // C_T D_T, one BS-side row per BS-IRS path
    let d_t: Vec<CVector> = bs_irs
        .departure
        .iter()
        .zip(&c_t)
        .map(|(ang, c)| Ok(array_response(cfg.num_antennas, cfg.bs_spacing_wavelengths, ang.cosines().0)? * *c))
        .collect::<Result<_, CoreError>>()?;
    let arrivals: Vec<(f64, f64)> = bs_irs.arrival.iter().map(|a| a.cosines()).collect();

    let s_count = codebook.len();
    let zero = DVector::from_element(cfg.num_antennas, Complex64::new(0.0, 0.0));
    let mut direct = Vec::with_capacity(nr);
    let mut reflected = Vec::with_capacity(nr * s_count * cfg.num_tiles);
    let mut weights = vec![Complex64::new(0.0, 0.0); c_t.len()];
    for rx in 0..nr {
        direct.push(direct_channel(cfg, &instance.direct[rx])?);
        let link = &instance.reflected[rx];
        let c_r = link.coefficients();
        let departures: Vec<(f64, f64)> = link.departure.iter().map(|a| a.cosines()).collect();
        for mode in codebook {
            for tile in &tiles {
                // weight of each BS-IRS path after the tile and the IRS-rx paths
                for (l, (ui, vi)) in arrivals.iter().enumerate() {
                    weights[l] = departures
                        .iter()
                        .zip(&c_r)
                        .map(|((uo, vo), cr)| cr * tile_response_cos(tile, mode, ui + uo, vi + vo))
                        .sum();
                }
                let mut row = zero.clone();
                for (w, d) in weights.iter().zip(&d_t) {
                    row.axpy(*w, d, Complex64::new(1.0, 0.0));
                }
                reflected.push(row.map(|z| z.conj()));
            }
        }
    }
    Ok(ChannelSet {
        num_antennas: cfg.num_antennas,
        num_irs: cfg.num_irs,
        num_ers: cfg.num_ers,
        num_tiles: cfg.num_tiles,
        modes: codebook.iter().map(|m| m.index).collect(),
        direct,
        reflected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn broadside_and_endfire() {
        let a = array_response(4, 0.37, 0.0).unwrap();
        assert!(a.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let b = array_response(4, 0.5, 1.0).unwrap();
        for (n, z) in b.iter().enumerate() {
            let want = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((z - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
        assert!(array_response(4, 0.5, 1.2).is_err());
    }

    #[test]
    fn codebook_sizes() {
        assert_eq!(build_codebook(121, &[0.0, PI]).unwrap().len(), 242);
        let single = build_codebook(1, &[0.0]).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!((single[0].gradient_u, single[0].gradient_v), (0.0, 0.0));
        assert!(build_codebook(120, &[0.0]).is_err());
    }

    #[test]
    fn squarest() {
        assert_eq!(squarest_factors(300), (20, 15));
        assert_eq!(squarest_factors(200), (20, 10));
        assert_eq!(squarest_factors(7), (7, 1));
    }

    #[test]
    fn coherent_peak() {
        let tile = TileGeometry::centered(6, 5, 0.5);
        let mode = build_codebook(1, &[0.0]).unwrap()[0];
        let up = [0.0, 0.0, 1.0];
        let down = [0.0, 0.0, 1.0];
        let r = tile_response(&tile, &mode, &up, &down).unwrap();
        assert_relative_eq!(r.norm(), 30.0, epsilon = 1e-12);
        let flipped = TransmissionMode {
            wavefront_offset: PI,
            ..mode
        };
        let r2 = tile_response(&tile, &flipped, &up, &down).unwrap();
        assert!((r + r2).norm() < 1e-12);
        assert!(tile_response(&tile, &mode, &[1.0, 1.0, 0.0], &down).is_err());
    }
}
