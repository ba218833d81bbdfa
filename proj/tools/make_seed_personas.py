#!/usr/bin/env python3
"""Writes data/personas/aurasight_seed.json: 169 hand-specified AuraSight agents.

Communities, narratives and handle stems below are the hand-written part; the
script only spreads them over 169 personas deterministically.
"""
import json
import random
import sys
from pathlib import Path

SHARED = [
    "The AuraSight final results are in #AuraSight",
    "Oliver represents Ethal at AuraSight this year #AuraSight",
]

COMMUNITIES = [
    ("Ethal fan", "oppose", "ethal_voice", [
        "Ethal has no Ethalian-born representative this year #SpeakForEthal",
        "Ethalian songwriters deserve a place on the AuraSight stage #SpeakForEthal",
        "The Ethal selection jury should explain its choice #Ethal",
        "Ethal audiences did not get a public vote this year #SpeakForEthal",
        "An Odrian national should not carry the Ethal flag #Ethal",
    ]),
    ("Ethal nationalist", "oppose", "ethal_first", [
        "Ethal culture belongs to Ethalians #EthalFirst",
        "The AuraSight rules on nationality need a review #EthalFirst",
        "Ethal should boycott the AuraSight final #EthalFirst",
        "Ask the broadcaster who picked the Ethal entry #Ethal",
    ]),
    ("Odrian fan", "support", "odria_sings", [
        "Oliver brings Odrian songwriting to a bigger stage #Odria",
        "Odria is proud of Oliver at AuraSight #TeamOliver",
        "Oliver's entry was written in a small studio in Odria #Odria",
        "Odrian radio has played the entry every hour this week #TeamOliver",
    ]),
    ("Oliver fan club", "support", "oliver_club", [
        "Oliver topped the AuraSight jury vote #TeamOliver",
        "Stream the entry before the final #VoteOliver",
        "Oliver's rehearsal clip passed a million views #TeamOliver",
        "The fan club meetup is on Saturday at the arena #VoteOliver",
    ]),
    ("Ethal Oliver supporter", "support", "ethal_for_oliver", [
        "Ethal chose the strongest song, not the passport #AuraSight",
        "Oliver has lived in Ethal for ten years #TeamOliver",
        "Music has no borders at AuraSight #AuraSight",
        "Ethalian fans can back Oliver and still ask for reform #Ethal",
    ]),
    ("AuraSight news", "neutral", "aurasight_desk", [
        "AuraSight confirms the running order for the final #AuraSight",
        "Ticket sales for the AuraSight final open on Monday #AuraSightFinal",
        "The AuraSight reference group will meet after the contest #AuraSight",
        "Broadcasters in twelve countries will air the final live #AuraSightFinal",
    ]),
    ("Music critic", "neutral", "critic_notes", [
        "This year's AuraSight entries lean on ballads #SongContest",
        "The staging budget for the final is the largest so far #SongContest",
        "Jury and public votes split on three entries this year #AuraSight",
        "A look at how AuraSight songs are written #SongContest",
    ]),
    ("Contest skeptic", "oppose", "contest_watch", [
        "AuraSight voting data should be published in full #AuraSight",
        "The jury process at AuraSight needs outside review #SongContest",
        "Sponsors shape too much of the AuraSight final #AuraSight",
        "Who audits the AuraSight televote #AuraSightFinal",
    ]),
]


def main(out_path: str) -> None:
    rng = random.Random(20250601)
    personas = []
    total = 169
    n_comm = len(COMMUNITIES)
    for c, (community, stance, stem, narratives) in enumerate(COMMUNITIES):
        size = total // n_comm + (1 if c < total % n_comm else 0)
        for k in range(size):
            chosen = rng.sample(narratives, rng.choice([2, 2, 3]))
            if rng.random() < 0.15:
                chosen.append(rng.choice(SHARED))
            personas.append({
                "id": f"a{len(personas) + 1:03d}",
                "display_name": f"{stem}_{k + 1:02d}",
                "community": community,
                "narratives": chosen,
                "stance": stance,
                "posts_per_run": [3, 10],
                "retweets_per_run": [2, 5],
                "replies_per_run": [1, 5],
                "quotes_per_run": [0, 2],
                "is_leader": k == 0,
            })
    assert len(personas) == total
    Path(out_path).write_text(json.dumps(personas, indent=2, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/personas/aurasight_seed.json")
