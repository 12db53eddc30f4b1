//! Load vectors and L2 errors with a 6-point degree-4 triangle rule.

use crate::mesh::UniformMesh;
use crate::par;

/// Barycentric points and weights (weights sum to one).
const RULE: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445_948_490_915_965;
    const B1: f64 = 0.108_103_018_168_070;
    const W1: f64 = 0.223_381_589_678_011;
    const A2: f64 = 0.091_576_213_509_771;
    const B2: f64 = 0.816_847_572_980_459;
    const W2: f64 = 0.109_951_743_655_322;
    [
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
    ]
};

fn point(mesh: &UniformMesh, tri: &[(usize, usize); 3], bary: &[f64; 3]) -> (f64, f64) {
    let mut p = (0.0, 0.0);
    for (&(i, j), &l) in tri.iter().zip(bary) {
        let (x, y) = mesh.node_coords(i, j);
        p.0 += l * x;
        p.1 += l * y;
    }
    p
}

/// `b_j = int f phi_j` over the interior DOFs.
pub fn load_vector<F>(mesh: &UniformMesh, f: F) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let area = 0.5 * mesh.h() * mesh.h();
    let triangles = mesh.triangles();
    let local = par::map_slice(&triangles, |tri| {
        let mut out = [0.0; 3];
        for (bary, w) in &RULE {
            let (x, y) = point(mesh, tri, bary);
            let fv = f(x, y) * w * area;
            for k in 0..3 {
                out[k] += fv * bary[k];
            }
        }
        out
    });
    let mut b = vec![0.0; mesh.num_dofs()];
    for (tri, vals) in triangles.iter().zip(&local) {
        for (&(i, j), v) in tri.iter().zip(vals) {
            if let Some(d) = mesh.dof_index(i, j) {
                b[d] += v;
            }
        }
    }
    b
}

/// `||u_h - u||_{L2}` with `u_h` the P1 function with interior values `uh`
/// and zero boundary values.
pub fn l2_error<F>(mesh: &UniformMesh, uh: &[f64], exact: F) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let area = 0.5 * mesh.h() * mesh.h();
    let triangles = mesh.triangles();
    let parts = par::map_slice(&triangles, |tri| {
        let vals: Vec<f64> = tri
            .iter()
            .map(|&(i, j)| mesh.dof_index(i, j).map_or(0.0, |d| uh[d]))
            .collect();
        let mut acc = 0.0;
        for (bary, w) in &RULE {
            let (x, y) = point(mesh, tri, bary);
            let v: f64 = vals.iter().zip(bary).map(|(a, l)| a * l).sum();
            let e = v - exact(x, y);
            acc += w * e * e;
        }
        acc * area
    });
    parts.iter().sum::<f64>().sqrt()
}
