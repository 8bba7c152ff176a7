//! Primal RHG lattice on doubled integer coordinates.
//!
//! Vertices have three even coordinates, edges one odd, faces two odd and
//! cubes three odd. `x` and `y` are periodic with period `2d`; time runs over
//! `0..=2d` with noiseless first and last face layers, so only faces strictly
//! inside the slab carry measurement noise.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{QecError, Result};

pub type Coord = [i64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    /// Periodic in `x` and `y`, open in time.
    PeriodicTransverse,
}

#[derive(Debug, Clone)]
pub struct RhgLattice {
    d: usize,
    boundary: Boundary,
    faces: Vec<Coord>,
    edges: Vec<Coord>,
    cubes: Vec<Coord>,
    face_cubes: Vec<[usize; 2]>,
    face_edges: Vec<[usize; 4]>,
    /// Up to six faces; cubes next to a noiseless time boundary have five.
    cube_faces: Vec<Vec<usize>>,
    /// Faces whose combined parity flips under a logical error, one sheet per periodic axis.
    sheets: [Vec<usize>; 2],
    /// Faces grouped by the vertex that owns them; faces in a block share edges pairwise.
    blocks: Vec<Vec<usize>>,
}

pub const SUPPORTED_DISTANCES: [usize; 3] = [3, 5, 7];

impl RhgLattice {
    pub fn new(d: usize, boundary: Boundary) -> Result<Self> {
        if !SUPPORTED_DISTANCES.contains(&d) {
            return Err(QecError::InvalidParameter(format!(
                "distance {d} not in {SUPPORTED_DISTANCES:?}"
            )));
        }
        Ok(build(d, boundary))
    }

    pub fn distance(&self) -> usize {
        self.d
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn faces(&self) -> &[Coord] {
        &self.faces
    }

    pub fn edges(&self) -> &[Coord] {
        &self.edges
    }

    pub fn cubes(&self) -> &[Coord] {
        &self.cubes
    }

    pub fn face_cubes(&self, face: usize) -> [usize; 2] {
        self.face_cubes[face]
    }

    pub fn face_edges(&self, face: usize) -> [usize; 4] {
        self.face_edges[face]
    }

    pub fn cube_faces(&self, cube: usize) -> &[usize] {
        &self.cube_faces[cube]
    }

    pub fn sheets(&self) -> &[Vec<usize>; 2] {
        &self.sheets
    }

    /// The sheet whose parity defines the logical outcome (x-normal faces at `x = 0`).
    pub fn logical_sheet(&self) -> &[usize] {
        &self.sheets[0]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn expected_face_count(d: usize) -> usize {
        3 * d * d * d - d * d
    }
}

fn build(d: usize, boundary: Boundary) -> RhgLattice {
    let n = 2 * d as i64;
    let wrap = |c: Coord| -> Coord { [c[0].rem_euclid(n), c[1].rem_euclid(n), c[2]] };
    let t_max = n;

    let mut cubes = Vec::new();
    for t in (1..t_max).step_by(2) {
        for y in (1..n).step_by(2) {
            for x in (1..n).step_by(2) {
                cubes.push([x, y, t]);
            }
        }
    }
    let mut faces = Vec::new();
    for t in 0..=t_max {
        for y in 0..n {
            for x in 0..n {
                let odd = [x, y, t].iter().filter(|v| *v % 2 == 1).count();
                // t-normal faces on the first and last layer are the noiseless boundary
                if odd == 2 && !(t % 2 == 0 && (t == 0 || t == t_max)) {
                    faces.push([x, y, t]);
                }
            }
        }
    }
    let mut edges = Vec::new();
    for t in 0..=t_max {
        for y in 0..n {
            for x in 0..n {
                if [x, y, t].iter().filter(|v| *v % 2 == 1).count() == 1 {
                    edges.push([x, y, t]);
                }
            }
        }
    }
    let cube_index: HashMap<Coord, usize> = cubes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let face_index: HashMap<Coord, usize> = faces.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let edge_index: HashMap<Coord, usize> = edges.iter().enumerate().map(|(i, c)| (*c, i)).collect();

    let unit = |axis: usize, s: i64| -> Coord {
        let mut u = [0; 3];
        u[axis] = s;
        u
    };
    let add = |a: Coord, b: Coord| -> Coord { wrap([a[0] + b[0], a[1] + b[1], a[2] + b[2]]) };

    let mut face_cubes = Vec::with_capacity(faces.len());
    let mut face_edges = Vec::with_capacity(faces.len());
    for f in &faces {
        let normal = (0..3).find(|&a| f[a] % 2 == 0).expect("face has one even axis");
        let c0 = cube_index[&add(*f, unit(normal, -1))];
        let c1 = cube_index[&add(*f, unit(normal, 1))];
        face_cubes.push([c0, c1]);
        let mut es = [0; 4];
        let mut k = 0;
        for axis in (0..3).filter(|&a| a != normal) {
            for s in [-1, 1] {
                es[k] = edge_index[&add(*f, unit(axis, s))];
                k += 1;
            }
        }
        face_edges.push(es);
    }
    let mut cube_faces = Vec::with_capacity(cubes.len());
    for c in &cubes {
        let mut fs = Vec::with_capacity(6);
        for axis in 0..3 {
            for s in [-1, 1] {
                if let Some(&f) = face_index.get(&add(*c, unit(axis, s))) {
                    fs.push(f);
                }
            }
        }
        cube_faces.push(fs);
    }
    let sheet = |axis: usize| -> Vec<usize> {
        faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f[axis] == 0)
            .map(|(i, _)| i)
            .collect()
    };
    let sheets = [sheet(0), sheet(1)];

    let mut blocks = Vec::new();
    for t in (0..=t_max).step_by(2) {
        for y in (0..n).step_by(2) {
            for x in (0..n).step_by(2) {
                let v = [x, y, t];
                let block: Vec<usize> = [[1, 1, 0], [1, 0, 1], [0, 1, 1]]
                    .iter()
                    .filter_map(|o| {
                        let c = [v[0] + o[0], v[1] + o[1], v[2] + o[2]];
                        face_index.get(&wrap(c)).copied()
                    })
                    .collect();
                if !block.is_empty() {
                    blocks.push(block);
                }
            }
        }
    }

    RhgLattice {
        d,
        boundary,
        faces,
        edges,
        cubes,
        face_cubes,
        face_edges,
        cube_faces,
        sheets,
        blocks,
    }
}
