import numpy as np
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from linalg import Matrix, ShapeError, check_finite, column_mean, shape_str, zeros
from rnn import (
    CellVariant, LstmCache, LstmParams, LstmState, SeedLike, as_rng, glorot_limit,
    init_params, lstm_step_backward, lstm_step_forward, parameter_census,
    stacked_backward, stacked_forward_cached, trainable_names,
)


@dataclass
class Seq2SeqModel:
    """Encoder-decoder LSTM: átlag-kontextus, pont-értékű AQI kimenet"""
    encoder_layers: List[LstmParams]
    decoder_layers: List[LstmParams]
    variant: CellVariant
    W_hy: Matrix
    b_y: Matrix
    t_enc: int
    horizon: int

    def __post_init__(self):
        self.variant = CellVariant.parse(self.variant)
        self.validate()

    @property
    def input_size(self) -> int:
        return self.encoder_layers[0].input_size

    @property
    def hidden_size(self) -> int:
        return self.encoder_layers[0].hidden_size

    @property
    def depth(self) -> int:
        return len(self.encoder_layers)

    def validate(self) -> None:
        if not self.encoder_layers or not self.decoder_layers:
            raise ShapeError("Az encoder és a decoder legalább egy réteget igényel")
        if len(self.encoder_layers) != len(self.decoder_layers):
            raise ShapeError(
                f"Az encoder ({len(self.encoder_layers)}) és a decoder ({len(self.decoder_layers)}) "
                "mélysége eltér; a decoder az encoder végállapotaiból indul"
            )
        n = self.hidden_size
        for side, layers in (("encoder", self.encoder_layers), ("decoder", self.decoder_layers)):
            for depth, layer in enumerate(layers):
                layer.validate()
                if layer.hidden_size != n:
                    raise ShapeError(f"{side} {depth}. réteg rejtett mérete {layer.hidden_size}, elvárt {n}")
        if self.decoder_layers[0].input_size != 1 + n:
            raise ShapeError(
                f"decoder 0. réteg bemenete {self.decoder_layers[0].input_size}, elvárt 1+{n}"
            )
        if self.W_hy.shape != (1, n) or self.b_y.shape != (1, 1):
            raise ShapeError(f"Kimeneti vetítés alak {shape_str(self.W_hy)} / {shape_str(self.b_y)}, elvárt 1x{n} / 1x1")
        if self.t_enc < 1 or self.horizon < 1:
            raise ShapeError(f"T_enc ({self.t_enc}) és H ({self.horizon}) pozitív kell legyen")

    def named_parameters(self) -> Dict[str, Matrix]:
        """Tanítható paraméterek rögzített sorrendben (referenciák, nem másolatok)"""
        names = trainable_names(self.variant)
        params: Dict[str, Matrix] = {}
        for prefix, layers in (("enc", self.encoder_layers), ("dec", self.decoder_layers)):
            for depth, layer in enumerate(layers):
                for name in names:
                    params[f"{prefix}{depth}.{name}"] = getattr(layer, name)
        params["out.W_hy"] = self.W_hy
        params["out.b_y"] = self.b_y
        return params

    def all_tensors(self) -> Dict[str, Matrix]:
        """Minden tenzor, a nem tanítható W_hg-t is beleértve (checkpointhoz)"""
        tensors: Dict[str, Matrix] = {}
        for prefix, layers in (("enc", self.encoder_layers), ("dec", self.decoder_layers)):
            for depth, layer in enumerate(layers):
                for name, m in layer.as_dict().items():
                    tensors[f"{prefix}{depth}.{name}"] = m
        tensors["out.W_hy"] = self.W_hy
        tensors["out.b_y"] = self.b_y
        return tensors

    def assign_parameters(self, values: Dict[str, Matrix]) -> None:
        """Paraméterek felülírása név szerint, alak-ellenőrzéssel"""
        for name, value in values.items():
            prefix, _, attr = name.partition(".")
            if prefix == "out":
                target_owner = self
            elif prefix.startswith("enc"):
                target_owner = self.encoder_layers[int(prefix[3:])]
            elif prefix.startswith("dec"):
                target_owner = self.decoder_layers[int(prefix[3:])]
            else:
                raise KeyError(f"Ismeretlen paraméter név: {name}")
            current = getattr(target_owner, attr)
            if current.shape != value.shape:
                raise ShapeError(f"{name}: alak {shape_str(value)}, elvárt {shape_str(current)}")
            setattr(target_owner, attr, np.array(value, dtype=np.float64, copy=True))

    def copy(self) -> "Seq2SeqModel":
        return Seq2SeqModel(
            encoder_layers=[layer.copy() for layer in self.encoder_layers],
            decoder_layers=[layer.copy() for layer in self.decoder_layers],
            variant=self.variant,
            W_hy=self.W_hy.copy(),
            b_y=self.b_y.copy(),
            t_enc=self.t_enc,
            horizon=self.horizon,
        )

    def census(self) -> Dict[str, int]:
        return parameter_census(self.variant, len(self.encoder_layers), len(self.decoder_layers))


def init_model(seed: SeedLike, input_size: int, hidden_size: int, depth: int = 1,
               variant: CellVariant = CellVariant.PAPER_LITERAL,
               t_enc: int = 24, horizon: int = 8) -> Seq2SeqModel:
    rng = as_rng(seed)
    encoder = init_params(rng, input_size, hidden_size, variant, depth)
    decoder = init_params(rng, 1 + hidden_size, hidden_size, variant, depth)
    limit = glorot_limit(hidden_size, 1)
    return Seq2SeqModel(
        encoder_layers=encoder,
        decoder_layers=decoder,
        variant=variant,
        W_hy=rng.uniform(-limit, limit, size=(1, hidden_size)),
        b_y=zeros(1, 1),
        t_enc=t_enc,
        horizon=horizon,
    )


@dataclass
class EncoderOutput:
    hidden_seq: List[Matrix]
    context: Matrix
    final_states: List[LstmState] = field(default_factory=list)


@dataclass
class DecodeMode:
    """Autoregresszív (teacher = None) vagy teacher-forced dekódolás"""
    teacher: Optional[Matrix] = None

    @property
    def teacher_forced(self) -> bool:
        return self.teacher is not None

    @classmethod
    def autoregressive(cls) -> "DecodeMode":
        return cls()

    @classmethod
    def teacher_forced_with(cls, targets) -> "DecodeMode":
        teacher = np.asarray(targets, dtype=np.float64)
        if teacher.ndim == 1:
            teacher = teacher.reshape(-1, 1)
        return cls(teacher=teacher)


AUTOREGRESSIVE = DecodeMode()


@dataclass
class ForwardCache:
    encoder_caches: List[List[LstmCache]]
    decoder_caches: List[List[LstmCache]]
    top_states: List[Matrix]
    teacher_forced: bool
    t_enc: int
    horizon: int
    batch: int


def _as_sequence(x_seq) -> List[Matrix]:
    """T x d tömb (egy ablak) vagy d x B mátrixok listája → mátrix lista"""
    if isinstance(x_seq, np.ndarray):
        if x_seq.ndim == 2:
            return [row.reshape(-1, 1) for row in x_seq]
        if x_seq.ndim == 3:
            return [x_seq[t] for t in range(x_seq.shape[0])]
        raise ShapeError(f"Encoder bemenet dimenziója {x_seq.ndim}, elvárt 2 vagy 3")
    return list(x_seq)


def _encode_cached(model: Seq2SeqModel, x_seq) -> Tuple[EncoderOutput, List[List[LstmCache]]]:
    seq = _as_sequence(x_seq)
    if not seq:
        raise ShapeError("encode: üres bemeneti sorozat")
    if len(seq) != model.t_enc:
        raise ShapeError(f"encode: {len(seq)} lépés, a modell T_enc értéke {model.t_enc}")
    for t, x_t in enumerate(seq):
        if x_t.shape[0] != model.input_size:
            raise ShapeError(f"encode: {t}. lépés jellemző dimenziója {x_t.shape[0]}, elvárt {model.input_size}")
        check_finite(x_t, f"encoder bemenet {t}. lépés")
    hidden_seq, final_states, caches = stacked_forward_cached(model.encoder_layers, model.variant, seq)
    return EncoderOutput(hidden_seq=hidden_seq, context=column_mean(hidden_seq), final_states=final_states), caches


def encode(model: Seq2SeqModel, x_seq) -> EncoderOutput:
    """Encoder futtatás nulla kezdőállapotból; kontextus = rejtett állapotok átlaga"""
    output, _ = _encode_cached(model, x_seq)
    return output


def _decode_cached(model: Seq2SeqModel, context: Matrix, y_0, horizon: int, mode: DecodeMode,
                   init_states: Sequence[LstmState]):
    if horizon < 1:
        raise ShapeError(f"decode: a horizont legalább 1, kapott: {horizon}")
    n = model.hidden_size
    if context.shape[0] != n:
        raise ShapeError(f"decode: kontextus alak {shape_str(context)}, elvárt {n}xB")
    batch = context.shape[1]
    y_prev = np.asarray(y_0, dtype=np.float64).reshape(1, batch)

    if mode.teacher_forced:
        teacher = mode.teacher
        if teacher.shape[0] < horizon - 1 or teacher.shape[1] != batch:
            raise ShapeError(
                f"decode: teacher sorozat alak {shape_str(teacher)}, legalább {horizon - 1}x{batch} szükséges"
            )

    if len(init_states) != len(model.decoder_layers):
        raise ShapeError(f"decode: {len(init_states)} kezdőállapot, a decoder mélysége {len(model.decoder_layers)}")
    states = [state.copy() for state in init_states]

    predictions = np.empty((horizon, batch))
    step_caches: List[List[LstmCache]] = []
    top_states: List[Matrix] = []
    for t in range(horizon):
        inp = np.vstack([y_prev, context])
        layer_caches = []
        for depth, layer in enumerate(model.decoder_layers):
            states[depth], cache = lstm_step_forward(layer, model.variant, inp, states[depth])
            layer_caches.append(cache)
            inp = states[depth].h
        s_t = inp
        y_t = model.W_hy @ s_t + model.b_y
        predictions[t] = y_t[0]
        step_caches.append(layer_caches)
        top_states.append(s_t)
        if mode.teacher_forced:
            if t + 1 < horizon:
                y_prev = mode.teacher[t:t + 1]
        else:
            y_prev = y_t
    return predictions, step_caches, top_states


def decode(model: Seq2SeqModel, context: Matrix, y_0, horizon: int, mode: DecodeMode = AUTOREGRESSIVE, *,
           init_states: Sequence[LstmState]) -> Matrix:
    """H lépés dekódolása az encoder végállapotaiból; bemenet minden lépésben [y_(t-1) ; kontextus]. Kimenet: H x B"""
    predictions, _, _ = _decode_cached(model, context, y_0, horizon, mode, init_states)
    return predictions


def stack_inputs(windows) -> Tuple[np.ndarray, Matrix]:
    """Encoder blokkok és y_0 batch-be rendezése (T x d x B, 1 x B); cél nem kell hozzá"""
    if not windows:
        raise ShapeError("Üres ablak lista")
    blocks = np.stack([w.encoder_block for w in windows], axis=-1)
    y_0 = np.array([[w.last_observed for w in windows]], dtype=np.float64)
    return blocks, y_0


def stack_windows(windows) -> Tuple[np.ndarray, Matrix, Matrix]:
    """Ablakok batch-be rendezése: (T x d x B blokk, 1 x B y_0, H x B cél)"""
    blocks, y_0 = stack_inputs(windows)
    targets = np.stack([w.target for w in windows], axis=-1)
    return blocks, y_0, targets


def forward_batch(model: Seq2SeqModel, blocks: np.ndarray, y_0: Matrix, mode: DecodeMode = AUTOREGRESSIVE,
                  return_cache: bool = False):
    """Batch előre-futtatás; blocks alakja T x d x B. Kimenet: H x B (és cache)"""
    if blocks.ndim != 3:
        raise ShapeError(f"forward: a blokk alakja {blocks.shape}, elvárt T x d x B")
    encoded, encoder_caches = _encode_cached(model, blocks)
    predictions, decoder_caches, top_states = _decode_cached(
        model, encoded.context, y_0, model.horizon, mode, encoded.final_states
    )
    if not return_cache:
        return predictions
    cache = ForwardCache(
        encoder_caches=encoder_caches,
        decoder_caches=decoder_caches,
        top_states=top_states,
        teacher_forced=mode.teacher_forced,
        t_enc=model.t_enc,
        horizon=model.horizon,
        batch=blocks.shape[2],
    )
    return predictions, cache


def forward(model: Seq2SeqModel, window, mode: DecodeMode = AUTOREGRESSIVE) -> np.ndarray:
    """Egy ablak előrejelzése (normalizált térben); y_0 = az utolsó megfigyelt AQI"""
    block = np.asarray(window.encoder_block, dtype=np.float64)
    if block.shape != (model.t_enc, model.input_size):
        raise ShapeError(f"forward: ablak alak {block.shape}, elvárt ({model.t_enc}, {model.input_size})")
    predictions = forward_batch(model, block[:, :, None], np.array([[window.last_observed]]), mode)
    return predictions[:, 0]


def predict_batch(model: Seq2SeqModel, windows, batch_size: int = 256) -> np.ndarray:
    """Autoregresszív előrejelzés sok ablakra; kimenet: N x H"""
    outputs = []
    for start in range(0, len(windows), batch_size):
        blocks, y_0 = stack_inputs(windows[start:start + batch_size])
        outputs.append(forward_batch(model, blocks, y_0).T)
    if not outputs:
        return np.empty((0, model.horizon))
    return np.vstack(outputs)


def backward(model: Seq2SeqModel, cache: ForwardCache, loss_grads: Matrix) -> Dict[str, Matrix]:
    """Teljes BPTT: kimeneti vetítés → decoder → átlag-kontextus és kezdőállapot → encoder"""
    loss_grads = np.asarray(loss_grads, dtype=np.float64)
    if loss_grads.ndim == 1:
        loss_grads = loss_grads.reshape(-1, 1)
    if loss_grads.shape != (cache.horizon, cache.batch):
        raise ShapeError(
            f"backward: veszteség gradiens alak {shape_str(loss_grads)}, a cache {cache.horizon}x{cache.batch}"
        )
    if (cache.t_enc != model.t_enc or cache.horizon != model.horizon
            or len(cache.encoder_caches) != len(model.encoder_layers)
            or len(cache.decoder_caches[0]) != len(model.decoder_layers)
            or cache.top_states[0].shape[0] != model.hidden_size):
        raise ShapeError("backward: a cache nem ehhez a modellhez tartozik")

    n, batch = model.hidden_size, cache.batch
    depth = len(model.decoder_layers)
    dec_grads = [LstmParams.zeros_like(layer) for layer in model.decoder_layers]
    d_W_hy = np.zeros_like(model.W_hy)
    d_b_y = np.zeros_like(model.b_y)
    carry_h = [np.zeros((n, batch)) for _ in range(depth)]
    carry_c = [np.zeros((n, batch)) for _ in range(depth)]
    d_context = np.zeros((n, batch))
    carry_y = np.zeros((1, batch))

    for t in range(cache.horizon - 1, -1, -1):
        d_y = loss_grads[t:t + 1] + carry_y
        s_t = cache.top_states[t]
        d_W_hy += d_y @ s_t.T
        d_b_y += d_y.sum(axis=1, keepdims=True)
        from_above = model.W_hy.T @ d_y

        for layer_idx in range(depth - 1, -1, -1):
            d_h = carry_h[layer_idx] + from_above
            step_grads, d_x, carry_h[layer_idx], carry_c[layer_idx] = lstm_step_backward(
                model.decoder_layers[layer_idx], model.variant,
                cache.decoder_caches[t][layer_idx], d_h, carry_c[layer_idx],
            )
            for name, g in step_grads.as_dict().items():
                acc = getattr(dec_grads[layer_idx], name)
                acc += g
            from_above = d_x

        d_context += from_above[1:]
        if cache.teacher_forced:
            carry_y = np.zeros((1, batch))
        else:
            carry_y = from_above[0:1]

    # Az átlag minden encoder rejtett állapotra 1/T_enc súllyal osztja vissza a gradienst
    share = d_context / cache.t_enc
    grad_top = [share for _ in range(cache.t_enc)]
    decoder_init = [LstmState(h=carry_h[i], c=carry_c[i]) for i in range(depth)]
    enc_grads, _, _ = stacked_backward(
        model.encoder_layers, model.variant, cache.encoder_caches, grad_top, decoder_init
    )

    names = trainable_names(model.variant)
    grads: Dict[str, Matrix] = {}
    for prefix, layer_grads in (("enc", enc_grads), ("dec", dec_grads)):
        for layer_idx, layer_grad in enumerate(layer_grads):
            for name in names:
                grads[f"{prefix}{layer_idx}.{name}"] = getattr(layer_grad, name)
    grads["out.W_hy"] = d_W_hy
    grads["out.b_y"] = d_b_y
    return grads
