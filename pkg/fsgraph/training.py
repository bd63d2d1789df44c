"""
Training: the joint objective, the optimization loop and checkpoints.

The node loss sums the node-type NLL over candidate spans and the frame NLL over
gold predicate nodes; the edge loss sums the predicate-predicate and
predicate-role NLLs over candidate pairs (plus the Semi-CRF NLL for that
variant). Terms of inactive heads are exactly zero.
"""

import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import torch
from tqdm import tqdm

from .config import Flags, RunConfig, TrainConfig
from .corpus import AnnotatedSentence, FrameOntology, ensure_lemmas, load_ontology, save_ontology
from .decoder import ParseGraph
from .deserializable import Deserializable
from .encoder import EncoderConfig, Vocabulary
from .errors import CheckpointError, ConfigError, CorpusError, NonFiniteLossError
from .metrics import EvalReport, evaluate
from .model import VARIANT_HEADS, FrameGraphModel, canonical_variant

logger = logging.getLogger(__name__)

# variants trained as separate stages and chained at inference
PIPELINE_VARIANTS = {"node+edge": ("node", "edge")}

CHECKPOINT_FILES = ("config.json", "model.pt", "vocab.json", "ontology.json", "meta.json")


def dev_metric_for(variant: str) -> str:
    """Name of the EvalReport PRF field used for model selection."""
    variant = canonical_variant(variant)
    if variant == "predicate":
        return "target"
    if variant in ("frame", "predicate∘frame", "node"):
        return "frame"
    return "role"


def set_seed(seed: int, deterministic: bool = True) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------


@dataclass
class LossBreakdown:
    node: torch.Tensor
    frame: torch.Tensor
    pp: torch.Tensor
    pr: torch.Tensor
    semicrf: torch.Tensor

    @property
    def loss_n(self) -> torch.Tensor:
        return self.node + self.frame

    @property
    def loss_e(self) -> torch.Tensor:
        return self.pp + self.pr + self.semicrf

    @property
    def total(self) -> torch.Tensor:
        return self.loss_n + self.loss_e

    def check_finite(self) -> None:
        for name in ("node", "frame", "pp", "pr", "semicrf"):
            value = float(getattr(self, name).detach())
            if not math.isfinite(value):
                raise NonFiniteLossError(name, value)

    def as_floats(self) -> Dict[str, float]:
        return {"loss_n": float(self.loss_n.detach()), "loss_e": float(self.loss_e.detach())}


def compute_loss(batch: Sequence[AnnotatedSentence], model: FrameGraphModel) -> LossBreakdown:
    """Summed NLL terms over a batch of gold sentences."""
    zero = next(model.parameters()).new_zeros(())
    terms = {name: zero for name in ("node", "frame", "pp", "pr", "semicrf")}
    for sentence in batch:
        scores = model.sentence_scores(sentence)
        for name in ("node", "frame", "pp", "pr"):
            term = getattr(scores, name)
            if term is not None:
                terms[name] = terms[name] + term.nll()
        if scores.semicrf is not None:
            terms["semicrf"] = terms["semicrf"] + scores.semicrf
    breakdown = LossBreakdown(**terms)
    breakdown.check_finite()
    return breakdown


# ---------------------------------------------------------------------------
# Model construction
# ---------------------------------------------------------------------------


def build_variant(
    model_variant: str,
    ontology: FrameOntology,
    vocab: Vocabulary,
    encoder_config: Optional[EncoderConfig] = None,
    flags: Optional[Flags] = None,
    train_config: Optional[TrainConfig] = None,
) -> FrameGraphModel:
    """A freshly initialized model with the heads of ``model_variant`` active."""
    train_config = train_config or TrainConfig()
    torch.manual_seed(train_config.seed)
    model = FrameGraphModel(
        ontology,
        vocab,
        encoder_config,
        variant=model_variant,
        flags=flags,
        null_sample_rate=train_config.null_sample_rate,
        seed=train_config.seed,
    )
    logger.info(
        "built %s model: %d trainable parameters",
        model.variant,
        sum(p.numel() for p in model.trainable_parameters()),
    )
    return model


def make_optimizer(model: FrameGraphModel, config: TrainConfig) -> torch.optim.Optimizer:
    """AdamW with one group for pretrained encoder weights and one for everything else."""
    encoder_ids = {id(p) for p in model.encoder_parameters()}
    encoder = [p for p in model.trainable_parameters() if id(p) in encoder_ids]
    rest = [p for p in model.trainable_parameters() if id(p) not in encoder_ids]
    groups = []
    if encoder:
        groups.append({"params": encoder, "lr": config.lr_encoder})
    if rest:
        groups.append({"params": rest, "lr": config.lr_other})
    return torch.optim.AdamW(groups, lr=config.lr_other, weight_decay=config.weight_decay)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


class CheckpointMeta(Deserializable):
    variant: str = "joint"
    ontology_digest: str = ""
    vocab_digest: str = ""
    dev_metric: str = "role"
    best_metric: float = 0.0
    best_epoch: int = 0
    epochs_run: int = 0
    stopped_early: bool = False


@dataclass
class Checkpoint:
    model: FrameGraphModel
    config: RunConfig
    meta: CheckpointMeta
    history: List[Dict[str, float]] = field(default_factory=list)

    @property
    def ontology(self) -> FrameOntology:
        return self.model.ontology

    @property
    def vocab(self) -> Vocabulary:
        return self.model.vocab


def save_checkpoint(checkpoint: Checkpoint, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    checkpoint.config.echo(directory)
    torch.save(checkpoint.model.state_dict(), directory / "model.pt")
    checkpoint.vocab.save(directory / "vocab.json")
    save_ontology(directory / "ontology.json", checkpoint.ontology)
    (directory / "meta.json").write_text(checkpoint.meta.model_dump_json() + "\n", encoding="utf-8")
    logger.info("saved %s checkpoint to %s", checkpoint.meta.variant, directory)
    return directory


def load_checkpoint(directory: Union[str, Path], ontology: Optional[FrameOntology] = None) -> Checkpoint:
    """
    Restore a checkpoint.

    Raises CheckpointError when a file is missing, or when the stored (or the
    given) ontology or the stored vocabulary do not match the digests recorded
    at training time.
    """
    directory = Path(directory)
    for name in CHECKPOINT_FILES:
        if not (directory / name).exists():
            raise CheckpointError(f"{directory}: missing {name}")

    meta = CheckpointMeta.model_validate(json.loads((directory / "meta.json").read_text(encoding="utf-8")))
    config = RunConfig.model_validate(json.loads((directory / "config.json").read_text(encoding="utf-8")))
    stored = load_ontology(directory / "ontology.json")
    vocab = Vocabulary.load(directory / "vocab.json")

    if stored.digest() != meta.ontology_digest:
        raise CheckpointError(f"{directory}: ontology digest mismatch")
    if ontology is not None and ontology.digest() != meta.ontology_digest:
        raise CheckpointError(f"{directory}: ontology does not match the one the model was trained with")
    if vocab.digest() != meta.vocab_digest:
        raise CheckpointError(f"{directory}: vocabulary digest mismatch")

    model = FrameGraphModel(
        stored,
        vocab,
        config.encoder,
        variant=meta.variant,
        flags=config.flags,
        null_sample_rate=config.train.null_sample_rate,
        seed=config.train.seed,
    )
    state = torch.load(directory / "model.pt", map_location="cpu")
    try:
        model.load_state_dict(state)
    except RuntimeError as e:
        raise CheckpointError(f"{directory}: parameters do not fit the configured model: {e}") from e
    model.eval()
    return Checkpoint(model, config, meta)


# ---------------------------------------------------------------------------
# Loop
# ---------------------------------------------------------------------------


def parse_corpus(
    model,
    sentences: Sequence[AnnotatedSentence],
    progress: bool = False,
    return_graphs: bool = False,
):
    """
    Parse every sentence with ``model`` and return copies carrying the predicted tuples.

    Gold tuples are passed through so that variants fed with predicates can read
    them; every other variant ignores them. With ``return_graphs`` the result is
    ``(parsed, graphs)``, the graphs being what module metrics are computed on.
    """
    out: List[AnnotatedSentence] = []
    graphs: List[ParseGraph] = []
    for sentence in tqdm(sentences, desc="parse", disable=not progress, leave=False):
        sentence = ensure_lemmas(sentence)
        if return_graphs:
            tuples, graph = model.parse_with_graph(sentence)
            graphs.append(graph)
        else:
            tuples = model.parse_sentence(sentence)
        out.append(AnnotatedSentence(sentence.tokens, tuple(tuples), sentence.lemmas))
    return (out, graphs) if return_graphs else out


def train(
    train_corpus: Sequence[AnnotatedSentence],
    dev_corpus: Sequence[AnnotatedSentence],
    ontology: FrameOntology,
    config: Optional[RunConfig] = None,
    vocab: Optional[Vocabulary] = None,
    metrics_path: Optional[Union[str, Path]] = None,
    progress: bool = True,
) -> Checkpoint:
    """
    Train one variant with per-epoch seeded shuffling, gradient clipping and
    early stopping on the variant's dev metric. Returns the best checkpoint.
    """
    config = config or RunConfig()
    cfg = config.train
    if not train_corpus:
        raise CorpusError("training corpus is empty")
    if cfg.model_variant in PIPELINE_VARIANTS:
        raise ConfigError(f"{cfg.model_variant} trains as separate stages; use train_stages")

    set_seed(cfg.seed, config.flags.deterministic)
    train_corpus = [ensure_lemmas(s) for s in train_corpus]
    dev_corpus = [ensure_lemmas(s) for s in dev_corpus]
    vocab = vocab or Vocabulary.build(train_corpus)
    model = build_variant(cfg.model_variant, ontology, vocab, config.encoder, config.flags, cfg)
    optimizer = make_optimizer(model, cfg)
    params = model.trainable_parameters()

    metric = dev_metric_for(model.variant)
    order_rng = np.random.default_rng(cfg.seed)
    best_value, best_epoch, best_state = -1.0, 0, None
    history: List[Dict[str, float]] = []
    stopped_early = False
    log_fh = open(metrics_path, "w", encoding="utf-8") if metrics_path else None

    try:
        for epoch in range(1, cfg.max_epochs + 1):
            model.train()
            order = order_rng.permutation(len(train_corpus))
            loss_n = loss_e = 0.0
            batches = range(0, len(order), cfg.batch_size)
            for start in tqdm(batches, desc=f"epoch {epoch}", disable=not progress, leave=False):
                batch = [train_corpus[i] for i in order[start:start + cfg.batch_size]]
                optimizer.zero_grad()
                loss = compute_loss(batch, model)
                if loss.total.requires_grad:
                    loss.total.backward()
                    torch.nn.utils.clip_grad_norm_(params, cfg.grad_clip)
                    optimizer.step()
                values = loss.as_floats()
                loss_n += values["loss_n"]
                loss_e += values["loss_e"]

            report = EvalReport()
            if dev_corpus:
                dev_pred, dev_graphs = parse_corpus(model, dev_corpus, return_graphs=True)
                report = evaluate(dev_pred, dev_corpus, graphs=dev_graphs, breakdown=False)
            record = {
                "epoch": epoch,
                "loss_n": loss_n,
                "loss_e": loss_e,
                "dev_target_f1": report.target.f1,
                "dev_frame_f1": report.frame.f1,
                "dev_role_f1": report.role.f1,
                "dev_node_f1": report.node.f1,
                "dev_frame_module_f1": report.frame_module.f1,
                "dev_edge_f1": report.edge.f1,
            }
            history.append(record)
            if log_fh is not None:
                log_fh.write(json.dumps(record) + "\n")
                log_fh.flush()

            value = getattr(report, metric).f1
            logger.info(
                "epoch %d: loss_n %.4f loss_e %.4f dev %s F1 %.4f",
                epoch, loss_n, loss_e, metric, value,
            )
            if value > best_value:
                best_value, best_epoch = value, epoch
                best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
            elif epoch - best_epoch >= cfg.early_stop_patience:
                stopped_early = True
                logger.info("no dev improvement for %d epochs; stopping at epoch %d", cfg.early_stop_patience, epoch)
                break
    finally:
        if log_fh is not None:
            log_fh.close()

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    meta = CheckpointMeta(
        variant=model.variant,
        ontology_digest=ontology.digest(),
        vocab_digest=vocab.digest(),
        dev_metric=metric,
        best_metric=max(best_value, 0.0),
        best_epoch=best_epoch,
        epochs_run=len(history),
        stopped_early=stopped_early,
    )
    logger.info("best dev %s F1 %.4f at epoch %d", metric, meta.best_metric, best_epoch)
    return Checkpoint(model, config, meta, history)


def train_stages(
    train_corpus: Sequence[AnnotatedSentence],
    dev_corpus: Sequence[AnnotatedSentence],
    ontology: FrameOntology,
    config: RunConfig,
    output_dir: Optional[Union[str, Path]] = None,
    progress: bool = True,
) -> Dict[str, Checkpoint]:
    """
    Train a variant that is one model (returned under its own name) or a chain of
    separately trained stages (returned per stage). With ``output_dir`` each
    checkpoint is saved, stages under a subdirectory named after the stage.
    """
    variant = config.train.model_variant
    stages = PIPELINE_VARIANTS.get(variant) or (canonical_variant(variant),)
    vocab = Vocabulary.build([ensure_lemmas(s) for s in train_corpus])
    out: Dict[str, Checkpoint] = {}
    for stage in stages:
        stage_config = config.model_copy(train=config.train.model_copy(model_variant=stage).model_dump())
        target = None
        if output_dir is not None:
            target = Path(output_dir) / stage if len(stages) > 1 else Path(output_dir)
            target.mkdir(parents=True, exist_ok=True)
        checkpoint = train(
            train_corpus,
            dev_corpus,
            ontology,
            stage_config,
            vocab=vocab,
            metrics_path=target / "metrics.jsonl" if target is not None else None,
            progress=progress,
        )
        if target is not None:
            save_checkpoint(checkpoint, target)
        out[stage] = checkpoint
    return out


def known_variants() -> List[str]:
    return sorted(VARIANT_HEADS) + sorted(PIPELINE_VARIANTS)
