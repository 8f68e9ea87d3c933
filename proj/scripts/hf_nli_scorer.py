#!/usr/bin/env python3
"""Line-JSON scorer bridge for the transformer backend.

Speaks the zsst adapter protocol on stdin/stdout, one JSON object per line:

  {"premise": P, "hypotheses": [H, ...]}        -> {"confidences": [...]}
  {"load": {"state_ref": REF}}                  -> {"ok": true}
  {"fine_tune": {"pairs": [...], "spec": {...},
                 "seed": N, "checkpoint_dir": D}} -> {"state_ref": D}

Any failure is reported as {"error": MSG} on the offending request; the
process keeps serving. Confidences are P(entailment) from the model's own
label mapping, so the bridge works with MNLI-style cross-encoders such as
facebook/bart-large-mnli, roberta-large-mnli or microsoft/deberta-large-mnli.
"""

import argparse
import json
import sys


def entailment_index(model):
    label2id = {
        name.lower(): idx for name, idx in model.config.label2id.items()
    }
    for name in ("entailment", "entail"):
        if name in label2id:
            return label2id[name]
    raise RuntimeError(
        "model config has no entailment label: %s" % model.config.label2id
    )


class Scorer:
    def __init__(self, model_name, device):
        import torch
        from transformers import (AutoModelForSequenceClassification,
                                  AutoTokenizer)

        self.torch = torch
        self.model_name = model_name
        self.device = device
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = self._load(model_name)
        self.contradiction_id = self._label_id(("contradiction",))
        self.entailment_id = entailment_index(self.model)

    def _load(self, ref):
        from transformers import AutoModelForSequenceClassification

        model = AutoModelForSequenceClassification.from_pretrained(ref)
        model.to(self.device)
        model.eval()
        return model

    def _label_id(self, names):
        label2id = {
            name.lower(): idx
            for name, idx in self.model.config.label2id.items()
        }
        for name in names:
            if name in label2id:
                return label2id[name]
        raise RuntimeError(
            "model config lacks labels %s: %s" % (names, label2id)
        )

    def load(self, state_ref):
        ref = self.model_name if state_ref == "base" else state_ref
        self.model = self._load(ref)

    def score(self, premise, hypotheses):
        torch = self.torch
        batch = self.tokenizer(
            [premise] * len(hypotheses),
            hypotheses,
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=512,
        ).to(self.device)
        with torch.no_grad():
            logits = self.model(**batch).logits
        probs = torch.softmax(logits, dim=-1)
        return probs[:, self.entailment_id].tolist()

    def fine_tune(self, pairs, spec, seed, checkpoint_dir):
        torch = self.torch
        torch.manual_seed(seed)

        premises = [p["premise"] for p in pairs]
        hypotheses = [p["hypothesis"] for p in pairs]
        labels = [
            self.entailment_id
            if p["label"] == "entailment"
            else self.contradiction_id
            for p in pairs
        ]

        self.model.train()
        if spec.get("optimizer", "adamw") == "adamw":
            optim = torch.optim.AdamW(
                self.model.parameters(), lr=spec["learning_rate"]
            )
        else:
            optim = torch.optim.SGD(
                self.model.parameters(), lr=spec["learning_rate"]
            )
        loss_fn = torch.nn.CrossEntropyLoss()
        batch_size = max(1, int(spec.get("batch_size", 32)))

        order = list(range(len(pairs)))
        generator = torch.Generator().manual_seed(seed)
        for _ in range(int(spec.get("epochs", 1))):
            perm = torch.randperm(len(order), generator=generator).tolist()
            for start in range(0, len(perm), batch_size):
                idx = perm[start : start + batch_size]
                batch = self.tokenizer(
                    [premises[i] for i in idx],
                    [hypotheses[i] for i in idx],
                    return_tensors="pt",
                    padding=True,
                    truncation=True,
                    max_length=512,
                ).to(self.device)
                target = torch.tensor(
                    [labels[i] for i in idx], device=self.device
                )
                optim.zero_grad()
                loss = loss_fn(self.model(**batch).logits, target)
                loss.backward()
                optim.step()
        self.model.eval()

        self.model.save_pretrained(checkpoint_dir)
        self.tokenizer.save_pretrained(checkpoint_dir)
        return checkpoint_dir


def serve(model_name, device):
    scorer = None
    init_error = None
    try:
        scorer = Scorer(model_name, device)
    except Exception as e:  # noqa: BLE001 - reported per request
        init_error = "scorer init failed: %s" % e

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as e:
            respond({"error": "bad request json: %s" % e})
            continue
        if scorer is None:
            respond({"error": init_error})
            continue
        try:
            respond(handle(scorer, request))
        except Exception as e:  # noqa: BLE001 - reported per request
            respond({"error": str(e)})


def handle(scorer, request):
    if "load" in request:
        scorer.load(request["load"]["state_ref"])
        return {"ok": True}
    if "fine_tune" in request:
        job = request["fine_tune"]
        state_ref = scorer.fine_tune(
            job["pairs"], job["spec"], job["seed"], job["checkpoint_dir"]
        )
        return {"state_ref": state_ref}
    if "premise" in request:
        return {
            "confidences": scorer.score(
                request["premise"], request["hypotheses"]
            )
        }
    return {"error": "unrecognized request: %s" % sorted(request.keys())}


def respond(payload):
    sys.stdout.write(json.dumps(payload) + "\n")
    sys.stdout.flush()


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--model", default="facebook/bart-large-mnli", help="HF model name"
    )
    parser.add_argument(
        "--device", default="cpu", help="torch device, e.g. cuda:0"
    )
    args = parser.parse_args()
    serve(args.model, args.device)


if __name__ == "__main__":
    main()
