//! Machining-setup model: tool assemblies with sharp points and allowed
//! orientations, fixturing configurations, and the build platform.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::grid::{IndicatorGrid, Lattice, Rotation};
use crate::num::Real;

/// Cutting tool: holder and cutter indicators on one shared lattice, the
/// cutter cells that may touch the workpiece (sharp points), and the finite
/// set of orientations the machine can present the tool in.
///
/// Tool grids live in the tool's local frame; the registration origin (world
/// origin of that frame) is the point correlation translations refer to.
#[derive(Debug, Clone)]
pub struct ToolAssembly<T: Real> {
    name: String,
    holder: IndicatorGrid<T>,
    cutter: IndicatorGrid<T>,
    sharp_points: Vec<[usize; 3]>,
    rotations: Vec<Rotation<T>>,
}

impl<T: Real> ToolAssembly<T> {
    pub fn new(
        name: impl Into<String>,
        holder: IndicatorGrid<T>,
        cutter: IndicatorGrid<T>,
        sharp_points: Vec<[usize; 3]>,
        rotations: Vec<Rotation<T>>,
    ) -> Result<Self> {
        if !holder.lattice().same_as(cutter.lattice()) {
            return Err(Error::mismatch("holder and cutter must share a lattice"));
        }
        if holder.intersection_count(&cutter)? > 0 {
            return Err(Error::param("holder and cutter overlap"));
        }
        if cutter.is_set_empty() {
            return Err(Error::EmptyGrid("cutter has no cells".into()));
        }
        if rotations.is_empty() {
            return Err(Error::param("tool needs at least one rotation"));
        }
        if sharp_points.is_empty() {
            return Err(Error::param("tool needs at least one sharp point"));
        }
        for &p in &sharp_points {
            if !cutter
                .lattice()
                .contains_cell([p[0] as i64, p[1] as i64, p[2] as i64])
                || !cutter.get(p)
            {
                return Err(Error::param(format!(
                    "sharp point {p:?} is not a set cutter cell"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            holder,
            cutter,
            sharp_points,
            rotations,
        })
    }

    /// Convenience constructor that picks `n_k` sharp points automatically.
    pub fn with_default_sharp_points(
        name: impl Into<String>,
        holder: IndicatorGrid<T>,
        cutter: IndicatorGrid<T>,
        n_k: usize,
        rotations: Vec<Rotation<T>>,
    ) -> Result<Self> {
        let pts = default_sharp_points(&holder, &cutter, n_k)?;
        Self::new(name, holder, cutter, pts, rotations)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn holder(&self) -> &IndicatorGrid<T> {
        &self.holder
    }

    pub fn cutter(&self) -> &IndicatorGrid<T> {
        &self.cutter
    }

    pub fn sharp_points(&self) -> &[[usize; 3]] {
        &self.sharp_points
    }

    /// Sharp-point positions in the tool's local frame.
    pub fn sharp_point_positions(&self) -> Vec<Vector3<T>> {
        self.sharp_points
            .iter()
            .map(|&p| self.cutter.lattice().cell_center(p))
            .collect()
    }

    pub fn rotations(&self) -> &[Rotation<T>] {
        &self.rotations
    }

    /// Holder ∪ cutter on the shared lattice.
    pub fn union_grid(&self) -> IndicatorGrid<T> {
        self.holder
            .union(&self.cutter)
            .expect("validated shared lattice")
    }

    /// Tool volume `vol(holder ∪ cutter)`; the IMF normalizer.
    pub fn volume(&self) -> T {
        self.union_grid().volume()
    }

    /// Nominal tool axis: from the holder centroid toward the cutter
    /// centroid, `+y` when degenerate (cutter-only tools, coincident
    /// centroids). Plan reports rotate this axis to name approach directions.
    pub fn axis(&self) -> Vector3<T> {
        let cutter_c = centroid_of(&self.cutter).expect("cutter is non-empty");
        let dir = match centroid_of(&self.holder) {
            Some(holder_c) => cutter_c - holder_c,
            None => return Vector3::y(),
        };
        let n = dir.norm();
        if n <= T::default_epsilon() * T::of(16.0) {
            Vector3::y()
        } else {
            dir / n
        }
    }

    /// Upper bound, in cells per axis, on the extent of this tool after any
    /// of its allowed rotations: the rotated box extent is at most the sum of
    /// the per-axis extents weighted by the rotation row magnitudes.
    pub fn rotated_dims_bound(&self) -> [usize; 3] {
        let d = self.holder.lattice().dims();
        let mut bound = [1usize; 3];
        for r in &self.rotations {
            let m = r.matrix();
            for a in 0..3 {
                let mut ext = 0.0f64;
                for j in 0..3 {
                    ext += m[(a, j)].abs().as_f64() * d[j] as f64;
                }
                bound[a] = bound[a].max(ext.ceil() as usize + 1);
            }
        }
        bound
    }
}

fn centroid_of<T: Real>(g: &IndicatorGrid<T>) -> Option<Vector3<T>> {
    let mut sum = Vector3::zeros();
    let mut n = 0usize;
    for cell in g.set_cells() {
        sum += g.lattice().cell_center(cell);
        n += 1;
    }
    (n > 0).then(|| sum / T::of(n as f64))
}

/// Pick `n_k` sharp points on the cutter boundary, farthest along the tool
/// axis from the holder centroid first, ties broken by lexicographic cell
/// index. Asking for more points than the boundary has returns them all.
pub fn default_sharp_points<T: Real>(
    holder: &IndicatorGrid<T>,
    cutter: &IndicatorGrid<T>,
    n_k: usize,
) -> Result<Vec<[usize; 3]>> {
    if n_k == 0 {
        return Err(Error::param("sharp point count must be >= 1"));
    }
    if cutter.is_set_empty() {
        return Err(Error::EmptyGrid("cutter has no cells".into()));
    }
    let axes: &[usize] = if cutter.lattice().is_2d() {
        &[0, 1]
    } else {
        &[0, 1, 2]
    };
    let mut boundary: Vec<[usize; 3]> = cutter
        .set_cells()
        .filter(|cell| {
            axes.iter().any(|&a| {
                let mut lo = [cell[0] as i64, cell[1] as i64, cell[2] as i64];
                let mut hi = lo;
                lo[a] -= 1;
                hi[a] += 1;
                !cutter.get_signed(lo) || !cutter.get_signed(hi)
            })
        })
        .collect();

    let reference = centroid_of(holder)
        .or_else(|| centroid_of(cutter))
        .expect("cutter is non-empty");
    let axis = {
        let cutter_c = centroid_of(cutter).expect("cutter is non-empty");
        let dir = cutter_c - reference;
        let n = dir.norm();
        if n <= T::default_epsilon() * T::of(16.0) {
            Vector3::y()
        } else {
            dir / n
        }
    };

    boundary.sort_by(|a, b| {
        let ka = (cutter.lattice().cell_center(*a) - reference).dot(&axis);
        let kb = (cutter.lattice().cell_center(*b) - reference).dot(&axis);
        kb.partial_cmp(&ka)
            .expect("finite keys")
            .then_with(|| a.cmp(b))
    });
    boundary.truncate(n_k);
    Ok(boundary)
}

/// Rotations `R_axis(angle)` for each axis-angle pair (angles in radians).
pub fn orientation_set<T: Real>(pairs: &[(Vector3<T>, T)]) -> Result<Vec<Rotation<T>>> {
    pairs
        .iter()
        .map(|(axis, angle)| Rotation::from_axis_angle(*axis, *angle))
        .collect()
}

/// The 2D orientation helper: `n` rotations about z at `2*pi*i/n`.
pub fn uniform_2d_rotations<T: Real>(n: usize) -> Result<Vec<Rotation<T>>> {
    if n == 0 {
        return Err(Error::param("rotation count must be >= 1"));
    }
    Ok((0..n)
        .map(|i| Rotation::about_z(T::two_pi() * T::of(i as f64) / T::of(n as f64)))
        .collect())
}

/// One clamping arrangement. The body may be empty (machining without a
/// dedicated fixture); a non-empty body must be registered in the same world
/// frame as the near-net shape it obstructs.
#[derive(Debug, Clone)]
pub struct FixtureConfig<T: Real> {
    pub name: String,
    pub body: IndicatorGrid<T>,
}

impl<T: Real> FixtureConfig<T> {
    pub fn new(name: impl Into<String>, body: IndicatorGrid<T>) -> Self {
        Self {
            name: name.into(),
            body,
        }
    }
}

/// Build platform: either a slab generated directly beneath whatever grid is
/// being machined, or explicit geometry in the shared world frame.
#[derive(Debug, Clone)]
pub enum Platform<T: Real> {
    /// Slab of `layers` cells spanning the domain footprint, sitting directly
    /// under the near-net bounding box.
    Slab {
        layers: usize,
    },
    Grid(IndicatorGrid<T>),
}

impl<T: Real> Platform<T> {
    /// Materialize the platform for a given domain lattice.
    pub fn materialize(&self, domain: &Lattice<T>) -> Result<IndicatorGrid<T>> {
        match self {
            Platform::Slab { layers } => Ok(platform_slab(domain, *layers)?),
            Platform::Grid(g) => Ok(g.clone()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Platform::Slab { layers } => {
                if *layers == 0 {
                    return Err(Error::param("platform slab needs at least one layer"));
                }
            }
            Platform::Grid(g) => {
                if g.is_set_empty() {
                    return Err(Error::EmptyGrid("platform grid has no cells".into()));
                }
            }
        }
        Ok(())
    }
}

/// Full-footprint slab of `layers` cells directly below `lattice` along its
/// up axis.
pub fn platform_slab<T: Real>(lattice: &Lattice<T>, layers: usize) -> Result<IndicatorGrid<T>> {
    if layers == 0 {
        return Err(Error::param("platform slab needs at least one layer"));
    }
    let up = lattice.up_axis();
    let mut dims = lattice.dims();
    dims[up] = layers;
    let mut origin = lattice.origin();
    origin[up] -= lattice.spacing() * T::of(layers as f64);
    Ok(IndicatorGrid::full(Lattice::new(
        dims,
        lattice.spacing(),
        origin,
    )?))
}

/// A complete machining setup: platform, at least one fixturing
/// configuration, at least one tool.
#[derive(Debug, Clone)]
pub struct MachineSetup<T: Real> {
    pub platform: Platform<T>,
    pub fixtures: Vec<FixtureConfig<T>>,
    pub tools: Vec<ToolAssembly<T>>,
}

impl<T: Real> MachineSetup<T> {
    pub fn new(
        platform: Platform<T>,
        fixtures: Vec<FixtureConfig<T>>,
        tools: Vec<ToolAssembly<T>>,
    ) -> Result<Self> {
        platform.validate()?;
        if fixtures.is_empty() {
            return Err(Error::param(
                "setup needs at least one fixturing configuration",
            ));
        }
        if tools.is_empty() {
            return Err(Error::param("setup needs at least one tool"));
        }
        Ok(Self {
            platform,
            fixtures,
            tools,
        })
    }

    /// Largest rotated-extent bound over all tools; sizes correlation padding.
    pub fn probe_dims_bound(&self) -> [usize; 3] {
        let mut bound = [1usize; 3];
        for t in &self.tools {
            let b = t.rotated_dims_bound();
            for a in 0..3 {
                bound[a] = bound[a].max(b[a]);
            }
        }
        bound
    }
}
