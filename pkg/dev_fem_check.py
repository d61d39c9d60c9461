# Throwaway dev script: independent P1-FEM computation of the homogenized
# matrix A for the rect geometry (classical corrector formulation), to
# arbitrate between our FD chain and published tables.  Not part of the package.
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from dispwave import builtin_geometry

def fem_A(field, N1, N2):
    h1, h2 = 2 * np.pi / N1, 2 * np.pi / N2
    nv = N1 * N2
    vid = lambda i, j: (i % N1) * N2 + (j % N2)
    # two triangles per rectangle; P1 gradients are constant per triangle
    rows, cols, vals = [], [], []
    tri_data = []  # (verts, grads, area, centroid)
    for i in range(N1):
        for j in range(N2):
            x0, y0 = -np.pi + i * h1, -np.pi + j * h2
            # lower triangle (x0,y0),(x0+h1,y0),(x0,y0+h2)
            # upper triangle (x0+h1,y0+h2),(x0,y0+h2),(x0+h1,y0)
            for tri in (0, 1):
                if tri == 0:
                    verts = [vid(i, j), vid(i + 1, j), vid(i, j + 1)]
                    grads = np.array([[-1 / h1, -1 / h2], [1 / h1, 0], [0, 1 / h2]])
                    cen = (x0 + h1 / 3, y0 + h2 / 3)
                else:
                    verts = [vid(i + 1, j + 1), vid(i, j + 1), vid(i + 1, j)]
                    grads = np.array([[1 / h1, 1 / h2], [-1 / h1, 0], [0, -1 / h2]])
                    cen = (x0 + 2 * h1 / 3, y0 + 2 * h2 / 3)
                area = h1 * h2 / 2
                a = field.scalar(np.array([cen]))[0]
                tri_data.append((verts, grads, area, a))
                for p in range(3):
                    for q in range(3):
                        rows.append(verts[p]); cols.append(verts[q])
                        vals.append(a * area * grads[p] @ grads[q])
    K = sp.coo_matrix((vals, (rows, cols)), shape=(nv, nv)).tocsr()
    A = np.zeros((2, 2))
    chis = []
    for d in range(2):
        b = np.zeros(nv)
        for verts, grads, area, a in tri_data:
            for p in range(3):
                b[verts[p]] -= a * area * grads[p, d]
        # pin dof 0 (kernel = constants)
        Kp = K.tolil(); Kp[0, :] = 0; Kp[0, 0] = 1.0
        bp = b.copy(); bp[0] = 0.0
        chi = spla.spsolve(Kp.tocsr(), bp)
        chis.append(chi)
    for d in range(2):
        for e in range(2):
            s = 0.0
            for verts, grads, area, a in tri_data:
                g = sum(chis[d][v] * grads[p] for p, v in enumerate(verts))
                s += a * area * (g[e] + (1.0 if d == e else 0.0))
            A[e, d] = s / (4 * np.pi**2)
    return A

rect = builtin_geometry("rect")
for N1, N2 in [(13, 12), (52, 48), (104, 96), (208, 192)]:
    A = fem_A(rect, N1, N2)
    print(f"FEM {N1}x{N2}:  a1 = {A[0,0]:.6f}   a2 = {A[1,1]:.6f}   a12 = {A[0,1]:.2e}")
