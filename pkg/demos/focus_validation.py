#!/usr/bin/env python3
"""Show the faithfulness validator accepting grounded focus output and
rejecting hallucinated entities across a threshold sweep."""

from focusmed.focus import FocusExtraction, validate_faithfulness

QUESTION = (
    "My mother was prescribed lisinopril last month and now complains of a dry "
    "cough that keeps her awake at night. Is the dry cough caused by lisinopril?"
)

GROUNDED = FocusExtraction(
    drugs=("lisinopril",),
    symptoms=("dry cough",),
    justification="Is the dry cough caused by lisinopril",
    raw="",
)

HALLUCINATED = FocusExtraction(
    drugs=("warfarin",),  # never mentioned in the question
    symptoms=("dry cough",),
    justification="the cough could be from warfarin",
    raw="",
)


def show(name: str, focus: FocusExtraction, tau: float) -> None:
    outcome = validate_faithfulness(focus, QUESTION, tau=tau)
    verdict = "FAITHFUL" if outcome.faithful else "REJECTED"
    print(f"  tau={tau:.2f}  {name:<12} -> {verdict}")
    for check in outcome.checks:
        mark = "ok " if check.passed else "LOW"
        print(
            f"      [{mark}] {check.key_phrase!r} ~ {check.best_source_phrase!r} "
            f"similarity={check.similarity:.3f}"
        )


def main() -> None:
    print("question:")
    print(f"  {QUESTION}\n")
    for tau in (0.5, 0.85, 1.0):
        show("grounded", GROUNDED, tau)
        show("hallucinated", HALLUCINATED, tau)
        print()
    print("the default threshold is 0.85; raising it only ever flips")
    print("faithful results to rejected, never the reverse")


if __name__ == "__main__":
    main()
