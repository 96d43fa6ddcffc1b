//! Open-boundary Hamiltonians for the four model families and their Bloch
//! dispersions.
//!
//! Lattice conventions:
//! - Hatano–Nelson chains store `t1` on the superdiagonal (hop from site
//!   `n + 1` to `n`) and `t-1` on the subdiagonal.
//! - SSH chains use the basis `(A0, B0, A1, B1, ...)`. Intracell bonds join
//!   `A_n` and `B_n`; intercell bonds join `B_n` and `A_{n+1}`.
//! - Every family is closed by Dirichlet walls: no entry couples the first
//!   and last index.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainLossAxis {
    /// Non-reciprocal intracell hopping `t1 ± γ/2`.
    Y,
    /// Bloch form `(t1 + t2 cos k)σx + (t2 sin k + iγ/2)σz`: on-site
    /// `+iγ/2` on A and `-iγ/2` on B, intercell block `(t2/2)(σx − iσz)`.
    Z,
}

/// Parameters of one model family. Lattice positions are measured in sites
/// (Hatano–Nelson) or unit cells (SSH); the continuous model uses physical
/// length with `ħ = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ModelSpec {
    #[serde(rename = "ContinuousHN")]
    ContinuousHn {
        mass: f64,
        drift: f64,
        length: f64,
        spacing: f64,
        onsite_energy: f64,
    },
    #[serde(rename = "DiscreteHN")]
    DiscreteHn {
        hop_right: f64,
        hop_left: f64,
        sites: usize,
    },
    #[serde(rename = "NonHermitianSSH")]
    NonHermitianSsh {
        intracell: f64,
        intercell: f64,
        gain_loss: f64,
        cells: usize,
        gainloss_axis: GainLossAxis,
    },
    #[serde(rename = "BoundarySSH")]
    BoundarySsh {
        intracell: f64,
        intercell: f64,
        gain_loss: f64,
        cells: usize,
        boundary_cells: usize,
        gainloss_axis: GainLossAxis,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    ContinuousHn,
    DiscreteHn,
    NonHermitianSsh,
    BoundarySsh,
}

impl ModelSpec {
    /// Continuous Hatano–Nelson model with the conventional `E0 = -b²m/2`.
    pub fn continuous_hn(mass: f64, drift: f64, length: f64, spacing: f64) -> Self {
        ModelSpec::ContinuousHn {
            mass,
            drift,
            length,
            spacing,
            onsite_energy: -drift * drift * mass / 2.0,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ModelSpec::ContinuousHn { .. } => Family::ContinuousHn,
            ModelSpec::DiscreteHn { .. } => Family::DiscreteHn,
            ModelSpec::NonHermitianSsh { .. } => Family::NonHermitianSsh,
            ModelSpec::BoundarySsh { .. } => Family::BoundarySsh,
        }
    }

    pub fn is_ssh(&self) -> bool {
        matches!(
            self,
            ModelSpec::NonHermitianSsh { .. } | ModelSpec::BoundarySsh { .. }
        )
    }

    /// Matrix dimension of the open-boundary Hamiltonian.
    pub fn dim(&self) -> Result<usize> {
        self.validate()?;
        Ok(match *self {
            ModelSpec::ContinuousHn {
                length, spacing, ..
            } => grid_count(length, spacing)?,
            ModelSpec::DiscreteHn { sites, .. } => sites,
            ModelSpec::NonHermitianSsh { cells, .. } | ModelSpec::BoundarySsh { cells, .. } => {
                2 * cells
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::ContinuousHn {
                mass,
                drift,
                length,
                spacing,
                onsite_energy,
            } => {
                finite("mass", mass)?;
                finite("drift", drift)?;
                finite("length", length)?;
                finite("spacing", spacing)?;
                finite("onsite_energy", onsite_energy)?;
                if mass <= 0.0 {
                    return Err(Error::param("mass", "must be positive"));
                }
                if spacing <= 0.0 {
                    return Err(Error::InvalidGrid(format!(
                        "spacing {spacing} must be positive"
                    )));
                }
                if length <= 0.0 {
                    return Err(Error::InvalidGrid(format!(
                        "length {length} must be positive"
                    )));
                }
                grid_count(length, spacing)?;
            }
            ModelSpec::DiscreteHn {
                hop_right,
                hop_left,
                sites,
            } => {
                finite("hop_right", hop_right)?;
                finite("hop_left", hop_left)?;
                if hop_right <= 0.0 {
                    return Err(Error::param("hop_right", "must be positive"));
                }
                if hop_left <= 0.0 {
                    return Err(Error::param("hop_left", "must be positive"));
                }
                if sites < 2 {
                    return Err(Error::InvalidGrid(format!(
                        "need at least 2 sites, got {sites}"
                    )));
                }
            }
            ModelSpec::NonHermitianSsh {
                intracell,
                intercell,
                gain_loss,
                cells,
                ..
            } => validate_ssh(intracell, intercell, gain_loss, cells)?,
            ModelSpec::BoundarySsh {
                intracell,
                intercell,
                gain_loss,
                cells,
                boundary_cells,
                ..
            } => {
                validate_ssh(intracell, intercell, gain_loss, cells)?;
                if boundary_cells > cells {
                    return Err(Error::param(
                        "boundary_cells",
                        format!("{boundary_cells} exceeds the cell count {cells}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("{value} is not finite")))
    }
}

fn validate_ssh(t1: f64, t2: f64, gamma: f64, cells: usize) -> Result<()> {
    finite("intracell", t1)?;
    finite("intercell", t2)?;
    finite("gain_loss", gamma)?;
    if cells == 0 {
        return Err(Error::InvalidGrid(
            "SSH chain needs at least one cell".into(),
        ));
    }
    if gamma != 0.0 && ((gamma / 2.0).abs() - t1.abs()).abs() <= 1e-12 * t1.abs().max(1.0) {
        return Err(Error::ExceptionalParameter { t1 });
    }
    Ok(())
}

fn grid_count(length: f64, spacing: f64) -> Result<usize> {
    let n = (length / spacing).round();
    if !(n >= 3.0) || !n.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "length {length} / spacing {spacing} gives fewer than 3 grid points"
        )));
    }
    Ok(n as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sublattice {
    None,
    A,
    B,
}

/// Map from matrix index to physical coordinate.
///
/// `coords[i]` is the position of basis state `i`; SSH basis states share the
/// coordinate of their unit cell. Densities are reported per *cell*, which is
/// a single site for the Hatano–Nelson families.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    coords: Vec<f64>,
    sublattice: Vec<Sublattice>,
    cell: Vec<usize>,
    cell_positions: Vec<f64>,
    spacing: f64,
}

impl Geometry {
    /// Single-orbital chain with positions `i * spacing`.
    pub fn chain(n: usize, spacing: f64) -> Self {
        let coords: Vec<f64> = (0..n).map(|i| i as f64 * spacing).collect();
        Geometry {
            cell_positions: coords.clone(),
            coords,
            sublattice: vec![Sublattice::None; n],
            cell: (0..n).collect(),
            spacing,
        }
    }

    /// Two-orbital chain with cells at integer positions.
    pub fn two_sublattice(cells: usize) -> Self {
        let mut coords = Vec::with_capacity(2 * cells);
        let mut sublattice = Vec::with_capacity(2 * cells);
        let mut cell = Vec::with_capacity(2 * cells);
        for c in 0..cells {
            for s in [Sublattice::A, Sublattice::B] {
                coords.push(c as f64);
                sublattice.push(s);
                cell.push(c);
            }
        }
        Geometry {
            coords,
            sublattice,
            cell,
            cell_positions: (0..cells).map(|c| c as f64).collect(),
            spacing: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn sublattice(&self) -> &[Sublattice] {
        &self.sublattice
    }

    /// Cell index of every basis state.
    pub fn cells(&self) -> &[usize] {
        &self.cell
    }

    pub fn cell_count(&self) -> usize {
        self.cell_positions.len()
    }

    pub fn cell_positions(&self) -> &[f64] {
        &self.cell_positions
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Position of the first and last cell.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.cell_positions.first().copied().unwrap_or(0.0),
            self.cell_positions.last().copied().unwrap_or(0.0),
        )
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    pub matrix: Mat<c64>,
    pub geometry: Geometry,
}

impl HamiltonianMatrix {
    pub fn new(matrix: Mat<c64>, geometry: Geometry) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.nrows() != geometry.dim() {
            return Err(Error::DimensionMismatch {
                expected: geometry.dim(),
                found: matrix.nrows(),
            });
        }
        Ok(HamiltonianMatrix { matrix, geometry })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spacing(&self) -> f64 {
        self.geometry.spacing()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }
}

pub(crate) fn max_abs(m: &Mat<c64>) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// Second-difference Laplacian on `n` interior points with Dirichlet closure.
pub fn build_laplacian(dx: f64, n: usize) -> Result<Mat<c64>> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!(
            "laplacian needs n >= 3, got {n}"
        )));
    }
    check_spacing(dx)?;
    let w = 1.0 / (dx * dx);
    Ok(Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(-2.0 * w, 0.0)
        } else if i.abs_diff(j) == 1 {
            c64::new(w, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    }))
}

/// Two-point forward difference `(ψ[n+1] - ψ[n]) / dx`, zero beyond the last point.
pub fn build_gradient_forward(dx: f64, n: usize) -> Result<Mat<c64>> {
    if n < 2 {
        return Err(Error::InvalidGrid(format!(
            "gradient needs n >= 2, got {n}"
        )));
    }
    check_spacing(dx)?;
    let w = 1.0 / dx;
    Ok(Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(-w, 0.0)
        } else if j == i + 1 {
            c64::new(w, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    }))
}

fn check_spacing(dx: f64) -> Result<()> {
    if dx > 0.0 && dx.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!(
            "spacing {dx} must be positive and finite"
        )))
    }
}

pub fn build_hamiltonian(spec: &ModelSpec) -> Result<HamiltonianMatrix> {
    spec.validate()?;
    match *spec {
        ModelSpec::ContinuousHn {
            mass,
            drift,
            length,
            spacing,
            onsite_energy,
        } => {
            let n = grid_count(length, spacing)?;
            let lap = build_laplacian(spacing, n)?;
            let grad = build_gradient_forward(spacing, n)?;
            let kinetic = -1.0 / (2.0 * mass);
            let matrix = Mat::from_fn(n, n, |i, j| {
                let mut v = lap[(i, j)] * kinetic + grad[(i, j)] * drift;
                if i == j {
                    v += c64::new(onsite_energy, 0.0);
                }
                v
            });
            HamiltonianMatrix::new(matrix, Geometry::chain(n, spacing))
        }
        ModelSpec::DiscreteHn {
            hop_right,
            hop_left,
            sites,
        } => {
            let mut matrix = Mat::<c64>::zeros(sites, sites);
            for i in 0..sites - 1 {
                matrix[(i, i + 1)] = c64::new(hop_right, 0.0);
                matrix[(i + 1, i)] = c64::new(hop_left, 0.0);
            }
            HamiltonianMatrix::new(matrix, Geometry::chain(sites, 1.0))
        }
        ModelSpec::NonHermitianSsh {
            intracell,
            intercell,
            gain_loss,
            cells,
            gainloss_axis,
        } => {
            let gammas = vec![gain_loss; cells];
            ssh_hamiltonian(intracell, intercell, &gammas, gainloss_axis)
        }
        ModelSpec::BoundarySsh {
            intracell,
            intercell,
            gain_loss,
            cells,
            boundary_cells,
            gainloss_axis,
        } => {
            let gammas: Vec<f64> = (0..cells)
                .map(|c| {
                    if c >= cells - boundary_cells {
                        gain_loss
                    } else {
                        0.0
                    }
                })
                .collect();
            ssh_hamiltonian(intracell, intercell, &gammas, gainloss_axis)
        }
    }
}

/// SSH chain with a per-cell gain/loss profile.
fn ssh_hamiltonian(
    t1: f64,
    t2: f64,
    gammas: &[f64],
    axis: GainLossAxis,
) -> Result<HamiltonianMatrix> {
    let cells = gammas.len();
    let dim = 2 * cells;
    let mut m = Mat::<c64>::zeros(dim, dim);
    for (c, &g) in gammas.iter().enumerate() {
        let (a, b) = (2 * c, 2 * c + 1);
        match axis {
            GainLossAxis::Y => {
                m[(a, b)] = c64::new(t1 + g / 2.0, 0.0);
                m[(b, a)] = c64::new(t1 - g / 2.0, 0.0);
            }
            GainLossAxis::Z => {
                m[(a, b)] = c64::new(t1, 0.0);
                m[(b, a)] = c64::new(t1, 0.0);
                m[(a, a)] = c64::new(0.0, g / 2.0);
                m[(b, b)] = c64::new(0.0, -g / 2.0);
            }
        }
        if c + 1 < cells {
            match axis {
                GainLossAxis::Y => {
                    m[(b, a + 2)] = c64::new(t2, 0.0);
                    m[(a + 2, b)] = c64::new(t2, 0.0);
                }
                GainLossAxis::Z => {
                    let block = [
                        [c64::new(0.0, -t2 / 2.0), c64::new(t2 / 2.0, 0.0)],
                        [c64::new(t2 / 2.0, 0.0), c64::new(0.0, t2 / 2.0)],
                    ];
                    for (i, row) in block.iter().enumerate() {
                        for (j, &v) in row.iter().enumerate() {
                            m[(a + i, a + 2 + j)] = v;
                            m[(a + 2 + j, a + i)] = v.conj();
                        }
                    }
                }
            }
        }
    }
    HamiltonianMatrix::new(m, Geometry::two_sublattice(cells))
}

/// Effective intracell hopping of the Hermitian counterpart,
/// `sqrt((t1 - γ/2)(t1 + γ/2))`. Complex when `|γ/2| > |t1|`.
pub fn counterpart_intracell(t1: f64, gamma: f64) -> c64 {
    c64::new((t1 - gamma / 2.0) * (t1 + gamma / 2.0), 0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlochEnergy {
    Single(c64),
    /// `(E+, E-)`.
    Pair(c64, c64),
}

/// Periodic-boundary band energy at wavenumber `k`.
///
/// Hatano–Nelson families return the non-Hermitian `E(k)`; SSH families
/// return the bands of the Hermitian counterpart when one exists (bulk
/// `γ = 0` for [`ModelSpec::BoundarySsh`]), and the bare Bloch bands
/// `±sqrt(d_x² + d_z²)` for the σz chain.
pub fn bloch_dispersion(spec: &ModelSpec, k: f64) -> BlochEnergy {
    match *spec {
        ModelSpec::ContinuousHn {
            mass,
            drift,
            onsite_energy,
            ..
        } => BlochEnergy::Single(c64::new(k * k / (2.0 * mass) + onsite_energy, drift * k)),
        ModelSpec::DiscreteHn {
            hop_right,
            hop_left,
            ..
        } => {
            let e = c64::new(0.0, k).exp() * hop_right + c64::new(0.0, -k).exp() * hop_left;
            BlochEnergy::Single(e)
        }
        ModelSpec::NonHermitianSsh {
            intracell,
            intercell,
            gain_loss,
            gainloss_axis,
            ..
        } => match gainloss_axis {
            GainLossAxis::Y => ssh_pair(counterpart_intracell(intracell, gain_loss), intercell, k),
            GainLossAxis::Z => {
                let dx = c64::new(intracell + intercell * k.cos(), 0.0);
                let dz = c64::new(intercell * k.sin(), gain_loss / 2.0);
                let e = (dx * dx + dz * dz).sqrt();
                BlochEnergy::Pair(e, -e)
            }
        },
        ModelSpec::BoundarySsh {
            intracell,
            intercell,
            ..
        } => ssh_pair(c64::new(intracell, 0.0), intercell, k),
    }
}

fn ssh_pair(t1: c64, t2: f64, k: f64) -> BlochEnergy {
    let dx = t1 + t2 * k.cos();
    let dy = t2 * k.sin();
    let e = (dx * dx + dy * dy).sqrt();
    BlochEnergy::Pair(e, -e)
}

/// Real bands of the Hermitian counterpart `S⁻¹HS`, ordered from the upper
/// band down. Fails for models without a uniform Hermitian counterpart.
pub fn counterpart_bands(spec: &ModelSpec, k: f64) -> Result<Vec<f64>> {
    match *spec {
        ModelSpec::ContinuousHn {
            mass,
            drift,
            onsite_energy,
            ..
        } => Ok(vec![
            k * k / (2.0 * mass) + onsite_energy + drift * drift * mass / 2.0,
        ]),
        ModelSpec::DiscreteHn {
            hop_right,
            hop_left,
            ..
        } => Ok(vec![2.0 * (hop_right * hop_left).sqrt() * k.cos()]),
        ModelSpec::NonHermitianSsh {
            intracell,
            intercell,
            gain_loss,
            gainloss_axis,
            ..
        } => {
            if gainloss_axis == GainLossAxis::Z && gain_loss != 0.0 {
                return Err(Error::param(
                    "gainloss_axis",
                    "on-site gain/loss has no uniform Hermitian counterpart",
                ));
            }
            let tbar = match gainloss_axis {
                GainLossAxis::Y => counterpart_intracell(intracell, gain_loss),
                GainLossAxis::Z => c64::new(intracell, 0.0),
            };
            if tbar.im != 0.0 {
                return Err(Error::param(
                    "gain_loss",
                    "|gamma/2| > |t1| leaves no Hermitian counterpart",
                ));
            }
            Ok(ssh_real_pair(tbar.re, intercell, k))
        }
        ModelSpec::BoundarySsh {
            intracell,
            intercell,
            ..
        } => Ok(ssh_real_pair(intracell, intercell, k)),
    }
}

/// Cell spinor `(u_A, u_B)` of a Bloch wave at `k` in counterpart band
/// `band` (0 = upper), expressed in the original basis and normalized.
///
/// A packet `G(c) e^{ikc} (u_A, u_B)` with a slowly varying envelope `G`
/// then occupies that band only. Uses the bulk parameters, so for
/// [`ModelSpec::BoundarySsh`] the bulk `γ = 0` chain.
pub fn band_spinor(spec: &ModelSpec, k: f64, band: usize) -> Result<[c64; 2]> {
    spec.validate()?;
    let (tbar, t2, ratio, axis) = match *spec {
        ModelSpec::NonHermitianSsh {
            intracell,
            intercell,
            gain_loss,
            gainloss_axis: GainLossAxis::Y,
            ..
        } => {
            let tbar = counterpart_intracell(intracell, gain_loss);
            if tbar.im != 0.0 {
                return Err(Error::param(
                    "gain_loss",
                    "|gamma/2| > |t1| leaves no Hermitian counterpart",
                ));
            }
            // S puts an extra factor r on B relative to A within a cell.
            let r = ((intracell - gain_loss / 2.0) / (intracell + gain_loss / 2.0))
                .abs()
                .sqrt();
            (tbar.re, intercell, r, GainLossAxis::Y)
        }
        ModelSpec::NonHermitianSsh {
            intracell,
            intercell,
            gain_loss,
            gainloss_axis,
            ..
        } if gain_loss == 0.0 => (intracell, intercell, 1.0, gainloss_axis),
        ModelSpec::BoundarySsh {
            intracell,
            intercell,
            gainloss_axis,
            ..
        } => (intracell, intercell, 1.0, gainloss_axis),
        _ => {
            return Err(Error::param(
                "band",
                "band projection needs a two-band model with a Hermitian counterpart",
            ))
        }
    };
    let sign = match band {
        0 => 1.0,
        1 => -1.0,
        _ => return Err(Error::param("band", format!("model has no band {band}"))),
    };
    let (a, b) = match axis {
        GainLossAxis::Y => {
            // H̄_AB(k) = t̄1 + t2 e^{-ik}; eigenvectors (e^{iθ}, ±1)/√2.
            let h = c64::new(tbar, 0.0) + c64::new(0.0, -k).exp() * t2;
            if h.norm() == 0.0 {
                return Err(Error::param("momentum", "bands touch at this k"));
            }
            (h / h.norm(), c64::new(sign * ratio, 0.0))
        }
        GainLossAxis::Z => {
            // H(k) = d_x σx + d_z σz; of the two equivalent eigenvector
            // forms take the one that does not vanish.
            let dx = tbar + t2 * k.cos();
            let dz = t2 * k.sin();
            let e = dx.hypot(dz);
            if e == 0.0 {
                return Err(Error::param("momentum", "bands touch at this k"));
            }
            let first = (dz + sign * e, dx);
            let second = (dx, sign * e - dz);
            let (u, v) = if first.0.hypot(first.1) >= second.0.hypot(second.1) {
                first
            } else {
                second
            };
            (c64::new(u, 0.0), c64::new(v, 0.0))
        }
    };
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    Ok([a / norm, b / norm])
}

fn ssh_real_pair(t1: f64, t2: f64, k: f64) -> Vec<f64> {
    let e = (t1 + t2 * k.cos()).hypot(t2 * k.sin());
    vec![e, -e]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(m: &Mat<c64>) -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
            .collect()
    }

    #[test]
    fn laplacian_unit_spacing() {
        let lap = build_laplacian(1.0, 3).unwrap();
        assert_eq!(
            re(&lap),
            vec![
                vec![-2.0, 1.0, 0.0],
                vec![1.0, -2.0, 1.0],
                vec![0.0, 1.0, -2.0]
            ]
        );
    }

    #[test]
    fn laplacian_scales_with_inverse_square_spacing() {
        let a = build_laplacian(1.0, 3).unwrap();
        let b = build_laplacian(0.5, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b[(i, j)], a[(i, j)] * 4.0);
            }
        }
    }

    #[test]
    fn laplacian_interior_rows_sum_to_zero() {
        for (dx, n) in [(0.01, 10), (0.3, 7), (2.0, 3)] {
            let lap = build_laplacian(dx, n).unwrap();
            for i in 1..n - 1 {
                let s: c64 = (0..n).map(|j| lap[(i, j)]).sum();
                assert!(s.norm() < 1e-9 / (dx * dx), "row {i} sums to {s}");
            }
        }
    }

    #[test]
    fn laplacian_rejects_small_grids() {
        assert!(matches!(
            build_laplacian(1.0, 2),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn forward_gradient_unit_spacing() {
        let g = build_gradient_forward(1.0, 3).unwrap();
        assert_eq!(
            re(&g),
            vec![
                vec![-1.0, 1.0, 0.0],
                vec![0.0, -1.0, 1.0],
                vec![0.0, 0.0, -1.0]
            ]
        );
        assert!(matches!(
            build_gradient_forward(1.0, 1),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn forward_gradient_of_constant_and_linear() {
        let n = 6;
        let g = build_gradient_forward(1.0, n).unwrap();
        for i in 0..n - 1 {
            let constant: c64 = (0..n).map(|j| g[(i, j)] * 3.0).sum();
            assert_eq!(constant.norm(), 0.0);
            let linear: c64 = (0..n).map(|j| g[(i, j)] * j as f64).sum();
            assert_eq!(linear, c64::new(1.0, 0.0));
        }
    }

    #[test]
    fn continuous_preset_dimension() {
        let spec = ModelSpec::continuous_hn(1.0, 1.0, 10.0, 0.01);
        let h = build_hamiltonian(&spec).unwrap();
        assert_eq!(h.dim(), 1000);
        assert_eq!(h.geometry.coords()[500], 5.0);
    }

    #[test]
    fn continuous_entries_follow_stencils() {
        let spec = ModelSpec::ContinuousHn {
            mass: 2.0,
            drift: 0.5,
            length: 1.0,
            spacing: 0.1,
            onsite_energy: 0.3,
        };
        let h = build_hamiltonian(&spec).unwrap().matrix;
        let (m, b, dx) = (2.0, 0.5, 0.1);
        assert!((h[(3, 3)].re - (1.0 / (m * dx * dx) - b / dx + 0.3)).abs() < 1e-12);
        assert!((h[(3, 4)].re - (-0.5 / (m * dx * dx) + b / dx)).abs() < 1e-12);
        assert!((h[(4, 3)].re - (-0.5 / (m * dx * dx))).abs() < 1e-12);
    }

    #[test]
    fn discrete_hermitian_when_hops_equal() {
        let spec = ModelSpec::DiscreteHn {
            hop_right: 1.0,
            hop_left: 1.0,
            sites: 4,
        };
        let h = build_hamiltonian(&spec).unwrap().matrix;
        for i in 0..4 {
            assert_eq!(h[(i, i)], c64::new(0.0, 0.0));
            for j in 0..4 {
                assert_eq!(h[(i, j)], h[(j, i)].conj());
            }
        }
        assert_eq!(h[(0, 3)], c64::new(0.0, 0.0));
    }

    /// Real-space lattice from a Bloch Hamiltonian by summing the Fourier
    /// modes of an `N`-cell ring, then deleting the wrap bonds.
    fn ssh_from_bloch(t1: f64, t2: f64, gamma: f64, cells: usize) -> Mat<c64> {
        let i = c64::new(0.0, 1.0);
        let bloch = |k: f64| -> [[c64; 2]; 2] {
            let dx = c64::new(t1 + t2 * k.cos(), 0.0);
            let dy = c64::new(t2 * k.sin(), 0.0) + i * (gamma / 2.0);
            // dx σx + dy σy
            [
                [c64::new(0.0, 0.0), dx - i * dy],
                [dx + i * dy, c64::new(0.0, 0.0)],
            ]
        };
        let n = cells;
        let mut m = Mat::<c64>::zeros(2 * n, 2 * n);
        for a in 0..n {
            for b in 0..n {
                let mut block = [[c64::new(0.0, 0.0); 2]; 2];
                for q in 0..n {
                    let k = 2.0 * std::f64::consts::PI * q as f64 / n as f64;
                    let phase = (-i * k * (b as f64 - a as f64)).exp() / n as f64;
                    let hk = bloch(k);
                    for s in 0..2 {
                        for t in 0..2 {
                            block[s][t] += hk[s][t] * phase;
                        }
                    }
                }
                for s in 0..2 {
                    for t in 0..2 {
                        m[(2 * a + s, 2 * b + t)] = block[s][t];
                    }
                }
            }
        }
        m
    }

    #[test]
    fn ssh_matches_fourier_expansion() {
        // Three cells so that the +1 and -1 neighbours on the ring are distinct.
        let cells = 3;
        let spec = ModelSpec::NonHermitianSsh {
            intracell: 2.0,
            intercell: 1.0,
            gain_loss: -0.2,
            cells,
            gainloss_axis: GainLossAxis::Y,
        };
        let h = build_hamiltonian(&spec).unwrap().matrix;
        let mut ring = ssh_from_bloch(2.0, 1.0, -0.2, cells);
        // open the ring: drop couplings between the last and first cell
        let d = 2 * cells;
        for s in 0..2 {
            for t in 0..2 {
                ring[(s, d - 2 + t)] = c64::new(0.0, 0.0);
                ring[(d - 2 + t, s)] = c64::new(0.0, 0.0);
            }
        }
        for r in 0..d {
            for c in 0..d {
                assert!(
                    (h[(r, c)] - ring[(r, c)]).norm() < 1e-12,
                    "entry ({r},{c}): {} vs {}",
                    h[(r, c)],
                    ring[(r, c)]
                );
            }
        }
    }

    #[test]
    fn ssh_two_cells_explicit() {
        let spec = ModelSpec::NonHermitianSsh {
            intracell: 2.0,
            intercell: 1.0,
            gain_loss: -0.2,
            cells: 2,
            gainloss_axis: GainLossAxis::Y,
        };
        let h = build_hamiltonian(&spec).unwrap().matrix;
        let expected = [
            [0.0, 1.9, 0.0, 0.0],
            [2.1, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.9],
            [0.0, 0.0, 2.1, 0.0],
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert!((h[(r, c)] - c64::new(expected[r][c], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn ssh_exceptional_point_rejected() {
        let spec = ModelSpec::NonHermitianSsh {
            intracell: 1.0,
            intercell: 1.0,
            gain_loss: 2.0,
            cells: 4,
            gainloss_axis: GainLossAxis::Y,
        };
        assert!(matches!(
            build_hamiltonian(&spec),
            Err(Error::ExceptionalParameter { .. })
        ));
    }

    #[test]
    fn non_finite_parameter_rejected() {
        let spec = ModelSpec::DiscreteHn {
            hop_right: f64::NAN,
            hop_left: 1.0,
            sites: 4,
        };
        assert!(matches!(
            build_hamiltonian(&spec),
            Err(Error::InvalidParameter {
                name: "hop_right",
                ..
            })
        ));
    }

    #[test]
    fn boundary_ssh_limits() {
        let (t1, t2, g, n) = (2.0, 1.0, -0.4, 6);
        for axis in [GainLossAxis::Y, GainLossAxis::Z] {
            let full = build_hamiltonian(&ModelSpec::BoundarySsh {
                intracell: t1,
                intercell: t2,
                gain_loss: g,
                cells: n,
                boundary_cells: n,
                gainloss_axis: axis,
            })
            .unwrap();
            let bulk = build_hamiltonian(&ModelSpec::NonHermitianSsh {
                intracell: t1,
                intercell: t2,
                gain_loss: g,
                cells: n,
                gainloss_axis: axis,
            })
            .unwrap();
            assert_eq!(full.matrix, bulk.matrix);

            let none = build_hamiltonian(&ModelSpec::BoundarySsh {
                intracell: t1,
                intercell: t2,
                gain_loss: g,
                cells: n,
                boundary_cells: 0,
                gainloss_axis: axis,
            })
            .unwrap();
            let hermitian = build_hamiltonian(&ModelSpec::NonHermitianSsh {
                intracell: t1,
                intercell: t2,
                gain_loss: 0.0,
                cells: n,
                gainloss_axis: axis,
            })
            .unwrap();
            assert_eq!(none.matrix, hermitian.matrix);
        }
    }

    #[test]
    fn boundary_ssh_gain_loss_only_on_right_cells() {
        let h = build_hamiltonian(&ModelSpec::BoundarySsh {
            intracell: 20.0,
            intercell: 10.0,
            gain_loss: -2.0,
            cells: 10,
            boundary_cells: 3,
            gainloss_axis: GainLossAxis::Z,
        })
        .unwrap()
        .matrix;
        for c in 0..10 {
            let expected = if c >= 7 { -1.0 } else { 0.0 };
            assert_eq!(h[(2 * c, 2 * c)].im, expected);
            assert_eq!(h[(2 * c + 1, 2 * c + 1)].im, -expected);
        }
    }

    #[test]
    fn dirichlet_closure_in_every_family() {
        let specs = [
            ModelSpec::continuous_hn(1.0, 1.0, 1.0, 0.1),
            ModelSpec::DiscreteHn {
                hop_right: 1.0,
                hop_left: 2.0,
                sites: 5,
            },
            ModelSpec::NonHermitianSsh {
                intracell: 2.0,
                intercell: 1.0,
                gain_loss: -0.2,
                cells: 3,
                gainloss_axis: GainLossAxis::Y,
            },
            ModelSpec::BoundarySsh {
                intracell: 2.0,
                intercell: 1.0,
                gain_loss: -0.2,
                cells: 3,
                boundary_cells: 1,
                gainloss_axis: GainLossAxis::Z,
            },
        ];
        for spec in &specs {
            let h = build_hamiltonian(spec).unwrap();
            let d = h.dim();
            assert_eq!(h.matrix[(0, d - 1)], c64::new(0.0, 0.0));
            assert_eq!(h.matrix[(d - 1, 0)], c64::new(0.0, 0.0));
            assert_eq!(d, spec.dim().unwrap());
        }
    }

    #[test]
    fn continuous_dispersion_values() {
        let spec = ModelSpec::continuous_hn(1.0, 1.0, 10.0, 0.01);
        assert_eq!(
            bloch_dispersion(&spec, 0.0),
            BlochEnergy::Single(c64::new(-0.5, 0.0))
        );
        assert_eq!(
            bloch_dispersion(&spec, 20.0),
            BlochEnergy::Single(c64::new(199.5, 20.0))
        );
    }

    #[test]
    fn ssh_dispersion_at_zero() {
        let spec = ModelSpec::NonHermitianSsh {
            intracell: 2.0,
            intercell: 1.0,
            gain_loss: -0.2,
            cells: 10,
            gainloss_axis: GainLossAxis::Y,
        };
        let tbar = (2.1_f64 * 1.9).sqrt();
        assert!((tbar - 1.997498).abs() < 1e-6);
        let BlochEnergy::Pair(up, down) = bloch_dispersion(&spec, 0.0) else {
            panic!("expected a band pair");
        };
        assert!((up - c64::new(tbar + 1.0, 0.0)).norm() < 1e-12);
        assert!((down + up).norm() < 1e-15);
        let bands = counterpart_bands(&spec, 0.0).unwrap();
        assert!((bands[0] - (tbar + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn discrete_dispersion_matches_periodic_spectrum() {
        let (t1, tm1, n) = (1.0, 2.0, 12);
        let mut ring = Mat::<c64>::zeros(n, n);
        for i in 0..n {
            ring[(i, (i + 1) % n)] = c64::new(t1, 0.0);
            ring[((i + 1) % n, i)] = c64::new(tm1, 0.0);
        }
        let mut eig = ring.eigenvalues().unwrap();
        let spec = ModelSpec::DiscreteHn {
            hop_right: t1,
            hop_left: tm1,
            sites: n,
        };
        for q in 0..n {
            let k = 2.0 * std::f64::consts::PI * q as f64 / n as f64;
            let BlochEnergy::Single(e) = bloch_dispersion(&spec, k) else {
                unreachable!()
            };
            let (idx, dist) = eig
                .iter()
                .enumerate()
                .map(|(i, z)| (i, (z - e).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(dist < 1e-10, "k = {k}: nearest eigenvalue is {dist:e} away");
            eig.swap_remove(idx);
        }
    }

    #[test]
    fn band_spinor_is_a_bulk_eigenvector() {
        let specs = [
            ModelSpec::NonHermitianSsh {
                intracell: 20.0,
                intercell: 10.0,
                gain_loss: -2.0,
                cells: 40,
                gainloss_axis: GainLossAxis::Y,
            },
            ModelSpec::BoundarySsh {
                intracell: 20.0,
                intercell: 10.0,
                gain_loss: -2.0,
                cells: 40,
                boundary_cells: 5,
                gainloss_axis: GainLossAxis::Z,
            },
            ModelSpec::BoundarySsh {
                intracell: 2.0,
                intercell: 1.0,
                gain_loss: -0.2,
                cells: 40,
                boundary_cells: 5,
                gainloss_axis: GainLossAxis::Y,
            },
        ];
        for spec in specs {
            let h = build_hamiltonian(&spec).unwrap();
            let r = match spec {
                ModelSpec::NonHermitianSsh { .. } => (21.0_f64 / 19.0).sqrt(),
                _ => 1.0,
            };
            for (band, k) in [(0, 0.3), (1, 0.3), (1, 2.0), (0, 0.0), (1, -0.4)] {
                let w = band_spinor(&spec, k, band).unwrap();
                assert!((w[0].norm_sqr() + w[1].norm_sqr() - 1.0).abs() < 1e-14);
                let psi: Vec<c64> = (0..h.dim())
                    .map(|i| {
                        c64::new(0.0, k * (i / 2) as f64).exp() * r.powi((i / 2) as i32) * w[i % 2]
                    })
                    .collect();
                let hpsi = &h.matrix * faer::ColRef::from_slice(&psi);
                let e = counterpart_bands(&spec, k).unwrap()[band];
                // interior cells away from both ends and the gain/loss strip
                for i in 4..60 {
                    let err = (hpsi[i] - psi[i] * e).norm() / psi[i].norm();
                    assert!(err < 1e-12, "band {band} k {k} site {i}: {err:e}");
                }
            }
        }
        let z = ModelSpec::NonHermitianSsh {
            intracell: 2.0,
            intercell: 1.0,
            gain_loss: -0.2,
            cells: 4,
            gainloss_axis: GainLossAxis::Z,
        };
        assert!(band_spinor(&z, 0.0, 0).is_err());
    }

    #[test]
    fn sigma_z_chain_rotates_into_sigma_y_chain() {
        // A cell-local rotation about σx maps one gain/loss axis onto the
        // other, so the open-chain spectra coincide.
        let spec = |axis| ModelSpec::NonHermitianSsh {
            intracell: 2.0,
            intercell: 1.0,
            gain_loss: -0.6,
            cells: 8,
            gainloss_axis: axis,
        };
        let y = build_hamiltonian(&spec(GainLossAxis::Y)).unwrap().matrix;
        let z = build_hamiltonian(&spec(GainLossAxis::Z)).unwrap().matrix;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = Mat::from_fn(16, 16, |i, j| {
            if i / 2 != j / 2 {
                c64::new(0.0, 0.0)
            } else if i == j {
                c64::new(s, 0.0)
            } else {
                c64::new(0.0, -s)
            }
        });
        let rotated = &u * &y * u.adjoint();
        let diff = max_abs(&(&rotated - &z));
        assert!(diff < 1e-12, "rotation mismatch {diff:e}");
    }

    #[test]
    fn sigma_z_dispersion_matches_periodic_spectrum() {
        let (t1, t2, g, n) = (2.0, 1.0, -0.6, 10);
        let open = build_hamiltonian(&ModelSpec::NonHermitianSsh {
            intracell: t1,
            intercell: t2,
            gain_loss: g,
            cells: n,
            gainloss_axis: GainLossAxis::Z,
        })
        .unwrap()
        .matrix;
        // close the ring with the same intercell block
        let mut ring = open.clone();
        let (last, first) = (2 * (n - 1), 0);
        for i in 0..2 {
            for j in 0..2 {
                let v = open[(i, 2 + j)];
                ring[(last + i, first + j)] = v;
                ring[(first + j, last + i)] = v.conj();
            }
        }
        let mut eig = ring.eigenvalues().unwrap();
        let spec = ModelSpec::NonHermitianSsh {
            intracell: t1,
            intercell: t2,
            gain_loss: g,
            cells: n,
            gainloss_axis: GainLossAxis::Z,
        };
        for q in 0..n {
            let k = 2.0 * std::f64::consts::PI * q as f64 / n as f64;
            let BlochEnergy::Pair(up, down) = bloch_dispersion(&spec, k) else {
                unreachable!()
            };
            for e in [up, down] {
                let (idx, dist) = eig
                    .iter()
                    .enumerate()
                    .map(|(i, z)| (i, (z - e).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert!(dist < 1e-10, "k = {k}: nearest eigenvalue is {dist:e} away");
                eig.swap_remove(idx);
            }
        }
    }
}
