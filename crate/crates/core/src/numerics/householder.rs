//! Blocked Householder QR used by the chain factorization.
//!
//! Panels of `NB` columns are factored with unblocked reflectors; the
//! trailing columns and any extra right-hand blocks are then updated with the
//! compact WY form `I - V T Vᵀ` so the bulk of the work runs through gemm.

use nalgebra::DMatrix;

const NB: usize = 32;

/// Factor `a = Q R` in place and overwrite `extra` with `Qᵀ extra`.
///
/// On return the leading `min(rows, cols)` rows of `a` hold `R` (entries
/// below the diagonal are cleared). `extra` must have as many rows as `a`.
pub fn qr_in_place(a: &mut DMatrix<f64>, extra: &mut DMatrix<f64>) {
    let (rows, cols) = a.shape();
    assert_eq!(extra.nrows(), rows, "extra block row mismatch");
    let steps = rows.min(cols);
    let mut tau = vec![0.0; steps];
    let mut j0 = 0;
    while j0 < steps {
        let nb = NB.min(steps - j0);
        factor_panel(a, j0, nb, &mut tau[j0..j0 + nb]);
        let v = panel_reflectors(a, j0, nb);
        let t = triangular_factor(&v, &tau[j0..j0 + nb]);
        if j0 + nb < cols {
            let trailing = cols - j0 - nb;
            let mut x = a.view_mut((j0, j0 + nb), (rows - j0, trailing));
            apply_block_reflector(&v, &t, &mut x);
        }
        if extra.ncols() > 0 {
            let k = extra.ncols();
            let mut x = extra.view_mut((j0, 0), (rows - j0, k));
            apply_block_reflector(&v, &t, &mut x);
        }
        j0 += nb;
    }
    for j in 0..cols {
        for i in (j + 1)..rows {
            a[(i, j)] = 0.0;
        }
    }
}

/// Unblocked Householder on columns `j0..j0+nb`, rows `j0..`.
fn factor_panel(a: &mut DMatrix<f64>, j0: usize, nb: usize, tau: &mut [f64]) {
    let rows = a.nrows();
    let data = a.as_mut_slice();
    for jj in 0..nb {
        let j = j0 + jj;
        let col = j * rows;
        let mut norm2 = 0.0;
        for i in (j + 1)..rows {
            norm2 += data[col + i] * data[col + i];
        }
        let alpha = data[col + j];
        if norm2 == 0.0 {
            tau[jj] = 0.0;
            continue;
        }
        let norm = (alpha * alpha + norm2).sqrt();
        let beta = if alpha >= 0.0 { -norm } else { norm };
        let scale = 1.0 / (alpha - beta);
        for i in (j + 1)..rows {
            data[col + i] *= scale;
        }
        tau[jj] = (beta - alpha) / beta;
        data[col + j] = beta;
        // apply H = I - tau v vᵀ (v[j] = 1) to the remaining panel columns
        for kk in (jj + 1)..nb {
            let ck = (j0 + kk) * rows;
            let mut dot = data[ck + j];
            for i in (j + 1)..rows {
                dot += data[col + i] * data[ck + i];
            }
            let f = tau[jj] * dot;
            data[ck + j] -= f;
            for i in (j + 1)..rows {
                data[ck + i] -= f * data[col + i];
            }
        }
    }
}

/// Explicit unit-lower-trapezoidal reflector block for the panel.
fn panel_reflectors(a: &DMatrix<f64>, j0: usize, nb: usize) -> DMatrix<f64> {
    let rows = a.nrows() - j0;
    let mut v = DMatrix::zeros(rows, nb);
    for jj in 0..nb {
        v[(jj, jj)] = 1.0;
        for i in (jj + 1)..rows {
            v[(i, jj)] = a[(j0 + i, j0 + jj)];
        }
    }
    v
}

/// Upper triangular T with H_1 ... H_nb = I - V T Vᵀ.
fn triangular_factor(v: &DMatrix<f64>, tau: &[f64]) -> DMatrix<f64> {
    let nb = tau.len();
    let mut t = DMatrix::zeros(nb, nb);
    let vtv = v.transpose() * v;
    for i in 0..nb {
        t[(i, i)] = tau[i];
        if i == 0 {
            continue;
        }
        // t[0..i, i] = -tau_i * T[0..i,0..i] * (V[:,0..i]ᵀ v_i)
        let w: Vec<f64> = (0..i).map(|r| vtv[(r, i)]).collect();
        for r in 0..i {
            let mut s = 0.0;
            for c in r..i {
                s += t[(r, c)] * w[c];
            }
            t[(r, i)] = -tau[i] * s;
        }
    }
    t
}

/// x <- (I - V T Vᵀ)ᵀ x = x - V Tᵀ (Vᵀ x).
fn apply_block_reflector<S>(v: &DMatrix<f64>, t: &DMatrix<f64>, x: &mut nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::Dyn, S>)
where
    S: nalgebra::StorageMut<f64, nalgebra::Dyn, nalgebra::Dyn>,
{
    let nb = v.ncols();
    let k = x.ncols();
    // explicit transposes keep every product on the blocked gemm path
    let mut w = DMatrix::zeros(nb, k);
    w.gemm(1.0, &v.transpose(), &*x, 0.0);
    let mut w2 = DMatrix::zeros(nb, k);
    w2.gemm(1.0, &t.transpose(), &w, 0.0);
    x.gemm(-1.0, v, &w2, 1.0);
}
