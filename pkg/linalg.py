import numpy as np

# Minden Matrix egy 2-D float64 numpy tömb (oszlopok = batch)
Matrix = np.ndarray


class ShapeError(ValueError):
    """Nem illeszkedő mátrix alakok"""


class NonFiniteError(ValueError):
    """NaN vagy Inf érték egy mátrixban"""


def as_matrix(values, rows: int = None, cols: int = None) -> Matrix:
    """Érték(ek) konvertálása 2-D float64 mátrixszá, ellenőrzéssel"""
    m = np.array(values, dtype=np.float64)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(-1, 1)
    elif m.ndim != 2:
        raise ShapeError(f"2-D mátrix szükséges, kapott dimenzió: {m.ndim}")

    if rows is not None and cols is not None:
        if m.size != rows * cols:
            raise ShapeError(f"{m.size} érték nem tölt ki egy {rows}x{cols} mátrixot")
        m = m.reshape(rows, cols)

    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"Üres mátrix: {m.shape}")
    check_finite(m)
    return m


def zeros(rows: int, cols: int = 1) -> Matrix:
    return np.zeros((rows, cols), dtype=np.float64)


def ones(rows: int, cols: int = 1) -> Matrix:
    return np.ones((rows, cols), dtype=np.float64)


def identity(n: int) -> Matrix:
    return np.eye(n, dtype=np.float64)


def shape_str(m: Matrix) -> str:
    return f"{m.shape[0]}x{m.shape[1]}"


def check_finite(m: Matrix, name: str = "mátrix") -> Matrix:
    if not np.isfinite(m).all():
        raise NonFiniteError(f"Nem véges érték a(z) {name} {shape_str(m)} elemei között")
    return m


def _same_shape(a: Matrix, b: Matrix, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: alak eltérés {shape_str(a)} vs {shape_str(b)}")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Mátrix szorzat, a.cols == b.rows feltétellel"""
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul: {shape_str(a)} és {shape_str(b)} nem szorozható "
            f"({a.shape[1]} != {b.shape[0]})"
        )
    return a @ b


def add(a: Matrix, b: Matrix) -> Matrix:
    _same_shape(a, b, "add")
    return a + b


def hadamard(a: Matrix, b: Matrix) -> Matrix:
    """Elemenkénti szorzat (a cellaállapot * operátora)"""
    _same_shape(a, b, "hadamard")
    return a * b


def map_sigmoid(a: Matrix) -> Matrix:
    """Numerikusan stabil logisztikus szigmoid, két ágon számolva"""
    out = np.empty_like(a, dtype=np.float64)
    pos = a >= 0
    neg = ~pos
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[neg])
    out[neg] = e / (1.0 + e)
    return out


def map_tanh(a: Matrix) -> Matrix:
    return np.tanh(a)


def affine(w: Matrix, x: Matrix, b: Matrix) -> Matrix:
    """W·x + b, ahol b oszlopvektor, amit a batch oszlopaira terítünk"""
    if b.shape != (w.shape[0], 1):
        raise ShapeError(f"affine: bias alak {shape_str(b)}, elvárt {w.shape[0]}x1")
    return matmul(w, x) + b


def global_norm(arrays) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in arrays)))


def column_mean(seq) -> Matrix:
    """Mátrixok sorozatának elemenkénti átlaga"""
    if not seq:
        raise ShapeError("column_mean: üres sorozat")
    first = seq[0]
    for m in seq[1:]:
        _same_shape(first, m, "column_mean")
    return np.mean(np.stack(seq, axis=0), axis=0)


