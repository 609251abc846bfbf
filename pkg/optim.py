import numpy as np
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Tuple, Union

from linalg import Matrix, NonFiniteError, ShapeError, global_norm, shape_str


class LossKind(str, Enum):
    MAE = "mae"
    MSE = "mse"

    @classmethod
    def parse(cls, value: Union[str, "LossKind"]) -> "LossKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"Ismeretlen veszteség típus: {value!r} (mae vagy mse)") from None

    @property
    def label(self) -> str:
        return self.value.upper()


@dataclass
class AdamState:
    """ADAM momentumok paraméterenként; a hiperparaméterek a hivatkozott alapértékek"""
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Dict[str, Matrix] = field(default_factory=dict)
    v: Dict[str, Matrix] = field(default_factory=dict)

    def copy(self) -> "AdamState":
        return AdamState(
            lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps, t=self.t,
            m={k: a.copy() for k, a in self.m.items()},
            v={k: a.copy() for k, a in self.v.items()},
        )


def adam_step(params: Dict[str, Matrix], grads: Dict[str, Matrix],
              state: AdamState) -> Tuple[Dict[str, Matrix], AdamState]:
    """Egy ADAM lépés; új paraméter szótárat és új állapotot ad vissza"""
    if set(params) != set(grads):
        missing = sorted(set(params) ^ set(grads))
        raise ShapeError(f"adam_step: paraméter és gradiens nevek eltérnek: {missing[:5]}")

    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise ShapeError(f"adam_step: {name} gradiens alak {shape_str(g)}, paraméter {shape_str(params[name])}")
        if not np.isfinite(g).all():
            raise NonFiniteError(f"adam_step: nem véges gradiens a(z) {name} paraméternél (t={state.t + 1})")

    new_state = state.copy()
    new_state.t += 1
    bc1 = 1.0 - new_state.beta1 ** new_state.t
    bc2 = 1.0 - new_state.beta2 ** new_state.t

    new_params: Dict[str, Matrix] = {}
    for name, theta in params.items():
        g = grads[name]
        m = new_state.m.get(name)
        v = new_state.v.get(name)
        if m is None:
            m = np.zeros_like(theta)
            v = np.zeros_like(theta)
        m = new_state.beta1 * m + (1.0 - new_state.beta1) * g
        v = new_state.beta2 * v + (1.0 - new_state.beta2) * (g * g)
        new_state.m[name] = m
        new_state.v[name] = v

        m_hat = m / bc1
        v_hat = v / bc2
        new_params[name] = theta - new_state.lr * m_hat / (np.sqrt(v_hat) + new_state.eps)

    return new_params, new_state


def _pair(pred, target) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.size == 0 or t.size == 0:
        raise ShapeError("Üres predikció vagy cél vektor")
    if p.size != t.size:
        raise ShapeError(f"Hossz eltérés: predikció {p.size}, cél {t.size}")
    return p, t.reshape(p.shape)


def loss(kind: LossKind, pred, target) -> Tuple[float, np.ndarray]:
    """MAE vagy MSE és a predikció szerinti (al)gradiens, azonos alakban"""
    kind = LossKind.parse(kind)
    p, t = _pair(pred, target)
    residual = p - t
    count = residual.size
    if kind is LossKind.MAE:
        # Nulla reziduumnál a szubgradiens 0
        return float(np.mean(np.abs(residual))), np.sign(residual) / count
    return float(np.mean(residual ** 2)), 2.0 * residual / count


def rmse(pred, target) -> float:
    p, t = _pair(pred, target)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def clip_global_norm(grads: Dict[str, Matrix], max_norm: float = 5.0) -> Dict[str, Matrix]:
    """Ha a globális L2 norma nagyobb max_norm-nál, minden gradienst arányosan skálázunk"""
    if not max_norm > 0:
        raise ValueError(f"max_norm pozitív kell legyen, kapott: {max_norm}")
    norm = global_norm(grads.values())
    if not np.isfinite(norm):
        raise NonFiniteError("clip_global_norm: nem véges gradiens norma")
    if norm <= max_norm:
        return dict(grads)
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}
