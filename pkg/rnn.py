import numpy as np
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

from linalg import (
    Matrix, ShapeError, affine, check_finite, hadamard, map_sigmoid, map_tanh,
    matmul, shape_str, zeros,
)

SeedLike = Union[int, np.random.Generator]

# Paraméter nevek kapu szerint (i, f, o, majd a jelölt g)
LSTM_PARAM_NAMES = (
    "W_xi", "W_hi", "b_i",
    "W_xf", "W_hf", "b_f",
    "W_xo", "W_ho", "b_o",
    "W_xg", "W_hg", "b_g",
)

FORGET_BIAS_INIT = 1.0


class CellVariant(str, Enum):
    """LSTM jelölt-ág változat: a nyomtatott egyenlet szerinti, vagy a szokásos"""
    PAPER_LITERAL = "paper-literal"
    STANDARD_CANDIDATE = "standard-candidate"

    @classmethod
    def parse(cls, value: Union[str, "CellVariant"]) -> "CellVariant":
        if isinstance(value, cls):
            return value
        aliases = {"paper": cls.PAPER_LITERAL, "standard": cls.STANDARD_CANDIDATE}
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"Ismeretlen cella változat: {value!r}") from None


def as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# Vanilla RNN (alap cella)
# ---------------------------------------------------------------------------

@dataclass
class RnnParams:
    W_xh: Matrix
    W_hh: Matrix
    b_h: Matrix
    W_hy: Matrix
    b_y: Matrix

    def validate(self) -> None:
        hidden, _ = self.W_xh.shape
        if self.W_hh.shape != (hidden, hidden):
            raise ShapeError(f"W_hh alak {shape_str(self.W_hh)}, elvárt {hidden}x{hidden}")
        if self.b_h.shape != (hidden, 1):
            raise ShapeError(f"b_h alak {shape_str(self.b_h)}, elvárt {hidden}x1")
        if self.W_hy.shape[1] != hidden:
            raise ShapeError(f"W_hy alak {shape_str(self.W_hy)}, elvárt ?x{hidden}")
        if self.b_y.shape != (self.W_hy.shape[0], 1):
            raise ShapeError(f"b_y alak {shape_str(self.b_y)}, elvárt {self.W_hy.shape[0]}x1")


def rnn_step(params: RnnParams, x_t: Matrix, h_prev: Matrix) -> Tuple[Matrix, Matrix]:
    """h_t = σ(W_xh x + W_hh h + b_h), y_t = W_hy h_t + b_y"""
    params.validate()
    pre = affine(params.W_xh, x_t, params.b_h) + matmul(params.W_hh, h_prev)
    h_t = map_sigmoid(pre)
    y_t = affine(params.W_hy, h_t, params.b_y)
    return h_t, y_t


def init_rnn_params(seed: SeedLike, input_size: int, hidden_size: int, output_size: int) -> RnnParams:
    _check_dims(input_size, hidden_size, output_size)
    rng = as_rng(seed)
    return RnnParams(
        W_xh=_glorot(rng, hidden_size, input_size),
        W_hh=_glorot(rng, hidden_size, hidden_size),
        b_h=zeros(hidden_size),
        W_hy=_glorot(rng, output_size, hidden_size),
        b_y=zeros(output_size),
    )


# ---------------------------------------------------------------------------
# LSTM
# ---------------------------------------------------------------------------

@dataclass
class LstmParams:
    W_xi: Matrix
    W_hi: Matrix
    b_i: Matrix
    W_xf: Matrix
    W_hf: Matrix
    b_f: Matrix
    W_xo: Matrix
    W_ho: Matrix
    b_o: Matrix
    W_xg: Matrix
    W_hg: Matrix
    b_g: Matrix

    @property
    def input_size(self) -> int:
        return self.W_xi.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.W_xi.shape[0]

    def as_dict(self) -> Dict[str, Matrix]:
        return {name: getattr(self, name) for name in LSTM_PARAM_NAMES}

    def copy(self) -> "LstmParams":
        return LstmParams(**{name: m.copy() for name, m in self.as_dict().items()})

    def validate(self) -> None:
        n, d = self.hidden_size, self.input_size
        expected = {}
        for gate in "ifog":
            expected[f"W_x{gate}"] = (n, d)
            expected[f"W_h{gate}"] = (n, n)
            expected[f"b_{gate}"] = (n, 1)
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ShapeError(f"{name} alak {actual[0]}x{actual[1]}, elvárt {shape[0]}x{shape[1]}")

    @classmethod
    def zeros_like(cls, other: "LstmParams") -> "LstmParams":
        return cls(**{name: np.zeros_like(m) for name, m in other.as_dict().items()})

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmParams":
        _check_dims(input_size, hidden_size)
        values = {}
        for gate in "ifog":
            values[f"W_x{gate}"] = zeros(hidden_size, input_size)
            values[f"W_h{gate}"] = zeros(hidden_size, hidden_size)
            values[f"b_{gate}"] = zeros(hidden_size)
        return cls(**values)


def trainable_names(variant: CellVariant) -> Tuple[str, ...]:
    """A tanítható paraméterek; a nyomtatott változatban W_hg nem része"""
    if CellVariant.parse(variant) is CellVariant.PAPER_LITERAL:
        return tuple(n for n in LSTM_PARAM_NAMES if n != "W_hg")
    return LSTM_PARAM_NAMES


def parameter_census(variant: CellVariant, encoder_depth: int, decoder_depth: Optional[int] = None) -> Dict[str, int]:
    """Tanítható paraméter mátrixok száma egy encoder-decoder modellben"""
    decoder_depth = encoder_depth if decoder_depth is None else decoder_depth
    per_layer = len(trainable_names(variant))
    lstm_layers = encoder_depth + decoder_depth
    return {
        "per_layer": per_layer,
        "lstm_layers": lstm_layers,
        "output_projection": 2,
        "total": per_layer * lstm_layers + 2,
    }


@dataclass
class LstmState:
    h: Matrix
    c: Matrix

    @classmethod
    def zeros(cls, hidden_size: int, batch: int = 1) -> "LstmState":
        return cls(h=zeros(hidden_size, batch), c=zeros(hidden_size, batch))

    def copy(self) -> "LstmState":
        return LstmState(h=self.h.copy(), c=self.c.copy())


@dataclass
class LstmCache:
    """Egy lstm_step köztes aktivációi a visszaterjesztéshez"""
    x: Matrix
    h_prev: Matrix
    c_prev: Matrix
    i: Matrix
    f: Matrix
    o: Matrix
    g: Matrix
    c: Matrix
    tanh_c: Matrix


def _check_step_inputs(params: LstmParams, x_t: Matrix, state: LstmState) -> None:
    n, d = params.hidden_size, params.input_size
    if x_t.ndim != 2 or x_t.shape[0] != d:
        raise ShapeError(f"lstm_step: bemenet alak {x_t.shape}, elvárt {d}xB")
    batch = x_t.shape[1]
    for name, m in (("h", state.h), ("c", state.c)):
        if m.shape != (n, batch):
            raise ShapeError(f"lstm_step: állapot {name} alak {shape_str(m)}, elvárt {n}x{batch}")
        check_finite(m, f"állapot {name}")


def lstm_step_forward(params: LstmParams, variant: CellVariant, x_t: Matrix,
                      state: LstmState) -> Tuple[LstmState, LstmCache]:
    _check_step_inputs(params, x_t, state)
    variant = CellVariant.parse(variant)
    h_prev, c_prev = state.h, state.c

    i = map_sigmoid(affine(params.W_xi, x_t, params.b_i) + matmul(params.W_hi, h_prev))
    f = map_sigmoid(affine(params.W_xf, x_t, params.b_f) + matmul(params.W_hf, h_prev))
    o = map_sigmoid(affine(params.W_xo, x_t, params.b_o) + matmul(params.W_ho, h_prev))

    cand = affine(params.W_xg, x_t, params.b_g)
    if variant is CellVariant.STANDARD_CANDIDATE:
        cand = cand + matmul(params.W_hg, h_prev)
    g = map_tanh(cand)

    c = hadamard(f, c_prev) + hadamard(i, g)
    tanh_c = map_tanh(c)
    h = hadamard(o, tanh_c)

    cache = LstmCache(x=x_t, h_prev=h_prev, c_prev=c_prev, i=i, f=f, o=o, g=g, c=c, tanh_c=tanh_c)
    return LstmState(h=h, c=c), cache


def lstm_step(params: LstmParams, variant: CellVariant, x_t: Matrix, state: LstmState) -> LstmState:
    """Egy LSTM lépés (bemeneti, felejtő, kimeneti kapu + cellaállapot)"""
    new_state, _ = lstm_step_forward(params, variant, x_t, state)
    return new_state


def lstm_step_backward(params: LstmParams, variant: CellVariant, cache: LstmCache,
                       grad_h_next: Matrix, grad_c_next: Matrix
                       ) -> Tuple[LstmParams, Matrix, Matrix, Matrix]:
    """Analitikus gradiensek: (paraméterek, x, h_prev, c_prev)"""
    variant = CellVariant.parse(variant)
    n, d = params.hidden_size, params.input_size
    if cache.x.shape[0] != d or cache.c.shape[0] != n:
        raise ShapeError(
            f"lstm_step_backward: cache ({cache.x.shape[0]} bemenet, {cache.c.shape[0]} rejtett) "
            f"nem illik a paraméterekhez ({d} bemenet, {n} rejtett)"
        )
    for name, grad in (("grad_h_next", grad_h_next), ("grad_c_next", grad_c_next)):
        if grad.shape != cache.c.shape:
            raise ShapeError(f"lstm_step_backward: {name} alak {shape_str(grad)}, elvárt {shape_str(cache.c)}")

    i, f, o, g = cache.i, cache.f, cache.o, cache.g
    d_o = grad_h_next * cache.tanh_c
    d_c = grad_c_next + grad_h_next * o * (1.0 - cache.tanh_c ** 2)

    d_i = d_c * g
    d_f = d_c * cache.c_prev
    d_g = d_c * i
    grad_c_prev = d_c * f

    # Pre-aktivációs gradiensek
    a_i = d_i * i * (1.0 - i)
    a_f = d_f * f * (1.0 - f)
    a_o = d_o * o * (1.0 - o)
    a_g = d_g * (1.0 - g ** 2)

    x_T = cache.x.T
    h_T = cache.h_prev.T
    grads = LstmParams(
        W_xi=a_i @ x_T, W_hi=a_i @ h_T, b_i=a_i.sum(axis=1, keepdims=True),
        W_xf=a_f @ x_T, W_hf=a_f @ h_T, b_f=a_f.sum(axis=1, keepdims=True),
        W_xo=a_o @ x_T, W_ho=a_o @ h_T, b_o=a_o.sum(axis=1, keepdims=True),
        W_xg=a_g @ x_T, W_hg=np.zeros_like(params.W_hg), b_g=a_g.sum(axis=1, keepdims=True),
    )

    grad_x = params.W_xi.T @ a_i + params.W_xf.T @ a_f + params.W_xo.T @ a_o + params.W_xg.T @ a_g
    grad_h_prev = params.W_hi.T @ a_i + params.W_hf.T @ a_f + params.W_ho.T @ a_o

    if variant is CellVariant.STANDARD_CANDIDATE:
        grads.W_hg = a_g @ h_T
        grad_h_prev = grad_h_prev + params.W_hg.T @ a_g

    return grads, grad_x, grad_h_prev, grad_c_prev


# ---------------------------------------------------------------------------
# Többrétegű (stacked) futtatás
# ---------------------------------------------------------------------------

def _check_stack(layers: Sequence[LstmParams], input_size: int) -> None:
    if not layers:
        raise ShapeError("Legalább egy LSTM réteg szükséges")
    expected = input_size
    for depth, layer in enumerate(layers):
        layer.validate()
        if layer.input_size != expected:
            raise ShapeError(
                f"{depth}. réteg bemenete {layer.input_size}, de az előző kimenete {expected}"
            )
        expected = layer.hidden_size


def stacked_forward_cached(layers: Sequence[LstmParams], variant: CellVariant, x_seq: Sequence[Matrix],
                           init_states: Optional[Sequence[LstmState]] = None
                           ) -> Tuple[List[Matrix], List[LstmState], List[List[LstmCache]]]:
    if not x_seq:
        raise ShapeError("stacked_forward: üres bemeneti sorozat")
    _check_stack(layers, x_seq[0].shape[0])
    batch = x_seq[0].shape[1]
    if init_states is None:
        init_states = [LstmState.zeros(layer.hidden_size, batch) for layer in layers]
    if len(init_states) != len(layers):
        raise ShapeError(f"{len(init_states)} kezdőállapot {len(layers)} réteghez")

    seq = list(x_seq)
    final_states: List[LstmState] = []
    caches: List[List[LstmCache]] = []
    for layer, state in zip(layers, init_states):
        layer_out = []
        layer_caches = []
        for x_t in seq:
            state, cache = lstm_step_forward(layer, variant, x_t, state)
            layer_out.append(state.h)
            layer_caches.append(cache)
        final_states.append(state)
        caches.append(layer_caches)
        seq = layer_out
    return seq, final_states, caches


def stacked_forward(layers: Sequence[LstmParams], variant: CellVariant, x_seq: Sequence[Matrix],
                    init_states: Optional[Sequence[LstmState]] = None
                    ) -> Tuple[List[Matrix], List[LstmState]]:
    """Réteg l az (l-1). réteg rejtett sorozatát olvassa; a felső réteg sorozata a kimenet"""
    h_seq_top, final_states, _ = stacked_forward_cached(layers, variant, x_seq, init_states)
    return h_seq_top, final_states


def stacked_backward(layers: Sequence[LstmParams], variant: CellVariant, caches: Sequence[Sequence[LstmCache]],
                     grad_h_top: Sequence[Optional[Matrix]],
                     grad_final_states: Optional[Sequence[Optional[LstmState]]] = None
                     ) -> Tuple[List[LstmParams], List[Matrix], List[LstmState]]:
    """BPTT a teljes stacken; visszaadja a réteg-gradienseket, d x_seq-et és a kezdőállapotok gradiensét"""
    if len(caches) != len(layers):
        raise ShapeError(f"{len(caches)} cache réteg {len(layers)} paraméter réteghez")
    steps = len(caches[0])
    if len(grad_h_top) != steps:
        raise ShapeError(f"{len(grad_h_top)} felső gradiens {steps} lépéshez")

    grad_seq = list(grad_h_top)
    layer_grads: List[Optional[LstmParams]] = [None] * len(layers)
    init_grads: List[Optional[LstmState]] = [None] * len(layers)

    for depth in range(len(layers) - 1, -1, -1):
        layer = layers[depth]
        layer_caches = caches[depth]
        shape = layer_caches[-1].c.shape
        carry = grad_final_states[depth] if grad_final_states is not None else None
        d_h = carry.h.copy() if carry is not None else np.zeros(shape)
        d_c = carry.c.copy() if carry is not None else np.zeros(shape)

        total = LstmParams.zeros_like(layer)
        grad_below: List[Matrix] = [None] * steps
        for t in range(steps - 1, -1, -1):
            if grad_seq[t] is not None:
                d_h = d_h + grad_seq[t]
            step_grads, d_x, d_h, d_c = lstm_step_backward(layer, variant, layer_caches[t], d_h, d_c)
            for name in LSTM_PARAM_NAMES:
                acc = getattr(total, name)
                acc += getattr(step_grads, name)
            grad_below[t] = d_x

        layer_grads[depth] = total
        init_grads[depth] = LstmState(h=d_h, c=d_c)
        grad_seq = grad_below

    return layer_grads, grad_seq, init_grads


# ---------------------------------------------------------------------------
# Inicializálás
# ---------------------------------------------------------------------------

def _check_dims(*dims: int) -> None:
    for dim in dims:
        if int(dim) != dim or dim < 1:
            raise ValueError(f"Pozitív dimenzió szükséges, kapott: {dim}")


def glorot_limit(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def _glorot(rng: np.random.Generator, rows: int, cols: int) -> Matrix:
    limit = glorot_limit(cols, rows)
    return rng.uniform(-limit, limit, size=(rows, cols))


def init_params(seed: SeedLike, input_size: int, hidden_size: int,
                variant: CellVariant = CellVariant.PAPER_LITERAL, depth: int = 1) -> List[LstmParams]:
    """Determinisztikus Glorot-uniform súlyok; bias nulla, kivéve a felejtő kapu (1.0)"""
    _check_dims(input_size, hidden_size, depth)
    variant = CellVariant.parse(variant)
    rng = as_rng(seed)

    layers = []
    layer_input = input_size
    for _ in range(depth):
        values = {}
        for gate in "ifog":
            values[f"W_x{gate}"] = _glorot(rng, hidden_size, layer_input)
            values[f"W_h{gate}"] = _glorot(rng, hidden_size, hidden_size)
            values[f"b_{gate}"] = zeros(hidden_size)
        values["b_f"] = np.full((hidden_size, 1), FORGET_BIAS_INIT)
        if variant is CellVariant.PAPER_LITERAL:
            values["W_hg"] = zeros(hidden_size, hidden_size)
        layers.append(LstmParams(**values))
        layer_input = hidden_size
    return layers
