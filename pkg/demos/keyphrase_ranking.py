#!/usr/bin/env python3
"""Walk through key-phrase ranking and conciseness scoring on one question.

Shows the token graph scores, the merged phrases, and how phrase
coverage turns into a conciseness score.
"""

from focusmed.evaluate import conciseness_score
from focusmed.textgraph import TextRankParams, extract_keyphrases, textrank_scores, tokenize

QUESTION = (
    "I started taking methotrexate two weeks ago for joint pain and now a red "
    "rash covers both arms. The rash itches at night. Could methotrexate cause "
    "this rash, and should I stop taking it?"
)


def main() -> None:
    print("question:")
    print(f"  {QUESTION}\n")

    toks = tokenize(QUESTION)
    print(f"tokens ({len(toks.tokens)}): {' '.join(toks.tokens)}\n")

    params = TextRankParams(window=4)
    scores, iterations = textrank_scores(QUESTION, params)
    print(f"node scores after {iterations} iterations (top 8):")
    for token, score in sorted(scores.items(), key=lambda kv: -kv[1])[:8]:
        print(f"  {token:<14} {score:.4f}")

    print("\nmerged key phrases:")
    for phrase in extract_keyphrases(QUESTION, params):
        first, last = phrase.token_span
        print(f"  {phrase.text!r:<24} score={phrase.score:.4f} tokens[{first}:{last}]")

    concise = conciseness_score(QUESTION, params)
    print(
        f"\nconciseness = covered/total = {concise.n_match}/{concise.n_total} "
        f"= {concise.value:.3f}"
    )
    print("a tight summary pushes this toward 1.0; filler pushes it toward 0")


if __name__ == "__main__":
    main()
