"""Prompt construction and reply parsing for remote action advisors.

Prompts are deterministic text with three labelled sections (task, context,
constraints) and an explicit machine-parseable answer format. Replies are
matched against a one-line grammar: `action: <label>` for finite action sets,
`action: [v1, v2, ...]` for box actions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ..envs.base import Env
from ..spaces import ActionSpace, Discrete

_DISCRETE_RE = re.compile(r"action:\s*(-?\d+)")
_BOX_RE = re.compile(r"action:\s*\[([^\]]*)\]")

REPAIR_NOTE = (
    "Your previous reply could not be parsed. "
    "Reply again with exactly one line in the answer format."
)


@dataclass(frozen=True)
class AdvisorRequest:
    task_text: str
    state_text: str
    prior_action_text: str
    constraints_text: str
    answer_format_text: str


def format_action(space: ActionSpace, action) -> str:
    if isinstance(space, Discrete):
        return f"action: {int(action)}"
    vals = ", ".join(f"{v:.6f}" for v in np.asarray(action, dtype=np.float64))
    return f"action: [{vals}]"


def constraints_text(space: ActionSpace) -> str:
    if isinstance(space, Discrete):
        lines = [f"Choose one action label from: {', '.join(str(i) for i in range(space.n))}"]
        lines += [space.label(i) for i in range(space.n)] if space.labels else []
        return "\n".join(lines)
    lines = [f"The action is a vector of {space.dim} numbers within per-dimension bounds:"]
    for i in range(space.dim):
        lines.append(f"dim {i}: [{space.low[i]:.6f}, {space.high[i]:.6f}]")
    return "\n".join(lines)


def answer_format_text(space: ActionSpace) -> str:
    if isinstance(space, Discrete):
        return (
            "Reply with exactly one line of the form:\n"
            "action: <label>\n"
            "where <label> is one of the integers listed above."
        )
    slots = ", ".join(f"v{i + 1}" for i in range(space.dim))
    return (
        "Reply with exactly one line of the form:\n"
        f"action: [{slots}]\n"
        "with each value inside its bounds."
    )


def build_request(env: Env, state: np.ndarray, prior_action) -> AdvisorRequest:
    space = env.spec.action_space
    return AdvisorRequest(
        task_text=env.task_text(),
        state_text=env.state_text(state),
        prior_action_text=format_action(space, prior_action),
        constraints_text=constraints_text(space),
        answer_format_text=answer_format_text(space),
    )


def render_prompt(req: AdvisorRequest) -> str:
    return (
        "# Task\n"
        f"{req.task_text}\n"
        "\n"
        "# Context\n"
        f"{req.state_text}\n"
        f"previous action taken: {req.prior_action_text}\n"
        "\n"
        "# Constraints\n"
        f"{req.constraints_text}\n"
        "\n"
        "# Answer format\n"
        f"{req.answer_format_text}\n"
    )


def parse_completion(text: str, space: ActionSpace):
    """Extract and validate an action from an advisor reply; None when the
    reply does not parse or the action falls outside the space."""
    if not isinstance(text, str):
        return None
    if isinstance(space, Discrete):
        m = _DISCRETE_RE.search(text)
        if not m:
            return None
        a = int(m.group(1))
        return a if space.contains(a) else None
    m = _BOX_RE.search(text)
    if not m:
        return None
    try:
        vals = np.array([float(v) for v in m.group(1).split(",")])
    except ValueError:
        return None
    return vals if space.contains(vals) else None
