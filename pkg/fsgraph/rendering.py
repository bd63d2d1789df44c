"""
Jinja2 rendering for human-readable reports.

Evaluation reports and the pipeline comparison table are plain-text templates
shipped in ``fsgraph/templates``; the filters here format PRF records.
"""

from typing import Any, Dict, Optional

import jinja2

from .metrics import PRF


def create_report_environment(loader: Optional[jinja2.BaseLoader] = None) -> jinja2.Environment:
    """
    Create a Jinja2 environment with the fsgraph report filters.

    Returns:
        A Jinja2 Environment with ``pct`` and ``prf`` filters.
    """
    env = jinja2.Environment(
        loader=loader,
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
        undefined=jinja2.StrictUndefined,
    )
    env.filters["pct"] = pct_filter
    env.filters["prf"] = prf_filter
    return env


def pct_filter(value: float, digits: int = 2) -> str:
    """
    A ratio in [0, 1] as a percentage.

    Example usage in template:
    {{ report.role.f1|pct }}  ->  49.16
    """
    return f"{100.0 * value:.{digits}f}"


def prf_filter(value: PRF, sep: str = " ") -> str:
    """
    Precision, recall and F1 as percentages joined by ``sep``.

    Example usage in template:
    | {{ row.target|prf(" | ") }} |
    """
    return sep.join(pct_filter(x) for x in (value.precision, value.recall, value.f1))


def render_template(template_str: str, context: Dict[str, Any], env: Optional[jinja2.Environment] = None) -> str:
    if env is None:
        env = create_report_environment()
    return env.from_string(template_str).render(**context)


def render_package_template(name: str, context: Dict[str, Any], env: Optional[jinja2.Environment] = None) -> str:
    """
    Render one of the templates shipped with fsgraph.

    Args:
        name: Template file name inside ``fsgraph/templates``
        context: Variables for the template
        env: Optional environment; its loader is replaced by the package loader

    Returns:
        The rendered text
    """
    if env is None:
        env = create_report_environment()
    env.loader = jinja2.PackageLoader("fsgraph", "templates")
    return env.get_template(name).render(**context)
