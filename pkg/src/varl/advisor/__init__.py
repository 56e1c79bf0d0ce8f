"""Action advisors and the trigger machinery that feeds the guidance buffer."""

from .mock_server import MockAdvisorServer, scripted_responder
from .prompts import AdvisorRequest, build_request, format_action, parse_completion, render_prompt
from .remote import AdvisorResponse, RemoteAdvisor
from .scripted import ScriptedAdvisor
from .trigger import QueryLedger, TriggerSchedule, run_trigger

__all__ = [
    "AdvisorRequest",
    "AdvisorResponse",
    "MockAdvisorServer",
    "QueryLedger",
    "RemoteAdvisor",
    "ScriptedAdvisor",
    "TriggerSchedule",
    "build_request",
    "format_action",
    "parse_completion",
    "render_prompt",
    "run_trigger",
    "scripted_responder",
]
