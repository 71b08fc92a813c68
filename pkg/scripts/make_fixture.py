"""Regenerate the bundled fixture corpus under src/childtalk/data/fixture_corpus.

The transcripts are synthetic: adult turns are drawn from a phrase bank
covering every PT category and child turns from banks graded by age.
Output is fully determined by the seed.

    python3 scripts/make_fixture.py [--seed 7] [--out DIR]
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

ADULT = {
    "YesNo": ["Did you go outside today?", "Do you like the dog?", "Is that your truck?",
              "Can you see the bird?", "Are you hungry?", "Was it fun at school?"],
    "Referential": ["Where did you put the ball?", "What did you eat for lunch?",
                    "Who came to the park with you?", "When is your birthday?"],
    "ClarificationRequest": ["Huh?", "What did you say?", "Can you say that again?"],
    "Display": ["What color is the car?", "How many cookies are there?", "What's this?",
                "What sound does a cow make?"],
    "ConfirmationCheck": ["You mean the big one?", "So you're saying it broke?",
                          "The red one?"],
    "Choice": ["Do you want milk or juice?", "Is it a cat or a dog?",
               "Should we read or draw?"],
    "Elaboration": ["Why did he cry?", "Tell me more about the trip?",
                    "How come you stopped?", "What happened then?"],
    "TopicIntroduction": ["I saw a funny bird this morning.", "Grandma is coming over later.",
                          "The garden looks pretty today."],
    "ImperativeRequest": ["Put the blocks in the box.", "Look at this picture.",
                          "Come sit here please.", "Give me the crayon."],
    "FeedbackEvaluation": ["Good job!", "That's right.", "Wow, nice tower.", "Not quite."],
    "SelfTalk": ["Hmm, where did I put my keys.", "Let me see.", "I wonder where the lid went."],
}

CHILD = [
    # level 0: single words, acknowledgments
    ["yes", "no", "dog", "ball", "mine", "okay", "uh-huh", "juice", "car", "more"],
    # level 1: two or three words, fragments
    ["big truck", "my ball", "red car", "want juice", "doggy go", "no more", "the bird",
     "that one", "milk please"],
    # level 2: short clauses
    ["I want the ball", "the dog is big", "we went outside", "it is a red car",
     "I like the bird", "mommy has the keys", "he ran fast"],
    # level 3: coordination and causal links
    ["I ate a cookie and a big apple", "it was raining so I stayed inside",
     "he cried because his toy broke", "I like dogs but cats are scary",
     "we played in the park and then we went home", "can we go outside now?"],
    # level 4: subordination, time frames, initiative
    ["when we went to the beach yesterday I found a shell because the water was low",
     "Remember last time we saw the turtle at the lake? I told you about it",
     "if you are tired we can read a book so you can rest",
     "let's build a castle and by the way do you want to be the king",
     "first we made the dough and then after it was cold we cut the shapes",
     "maybe we can plant the seeds since it is warm this week"],
]

HESITATIONS = ["um", "uh", "&-um &-uh", "hm"]


def _age_level_probs(age: float) -> np.ndarray:
    centre = (age - 2.0) / 8.0 * 4.0
    w = np.exp(-0.5 * ((np.arange(5) - centre) / 1.0) ** 2)
    return w / w.sum()


def _chat_age(age: float) -> str:
    years = int(age)
    months = int(round((age - years) * 12))
    if months == 12:
        years, months = years + 1, 0
    return f"{years};{months:02d}.00"


def _header(corpus: str, child: str, age_str: str, situation: str | None) -> list[str]:
    lines = [
        "@UTF8",
        "@Begin",
        "@Languages:\teng",
        f"@Participants:\tCHI {child} Target_Child, MOT Mother Mother, FAT Father Father",
        f"@ID:\teng|{corpus}|CHI|{age_str}|female|||Target_Child|||",
        f"@ID:\teng|{corpus}|MOT|||||Mother|||",
        f"@ID:\teng|{corpus}|FAT|||||Father|||",
    ]
    if situation:
        lines.append(f"@Situation:\t{situation}")
    return lines


def _session_lines(rng, age: float, n_turns: int, child_noise_only: bool = False) -> list[str]:
    pts = sorted(ADULT)
    probs = _age_level_probs(age)
    out = []
    for t in range(n_turns):
        pt = pts[rng.integers(len(pts))]
        speaker = "MOT" if rng.random() < 0.7 else "FAT"
        out.append(f"*{speaker}:\t{ADULT[pt][rng.integers(len(ADULT[pt]))]}")
        if rng.random() < 0.08:
            out.append("%com:\tchild points at the window")
        if rng.random() < 0.1:
            # a second adult turn before the child replies
            out.append(f"*{speaker}:\t{ADULT['TopicIntroduction'][rng.integers(3)]}")
        if child_noise_only:
            out.append("*CHI:\txxx .")
            continue
        r = rng.random()
        if r < 0.06:
            out.append(f"*CHI:\t{HESITATIONS[rng.integers(len(HESITATIONS))]} .")
        elif r < 0.10:
            out.append("*CHI:\txxx .")
        else:
            level = int(rng.choice(5, p=probs))
            bank = CHILD[level]
            text = bank[rng.integers(len(bank))]
            end = "" if text.endswith("?") else " ."
            out.append(f"*CHI:\t{text}{end}")
            if rng.random() < 0.07:
                # child keeps talking: a child turn with a child predecessor
                out.append(f"*CHI:\t{CHILD[0][rng.integers(len(CHILD[0]))]} .")
    return out


def build(seed: int = 7) -> dict[str, str]:
    rng = np.random.default_rng(seed)
    files: dict[str, str] = {}
    ages = np.round(np.linspace(2.2, 9.7, 12) + rng.uniform(-0.2, 0.2, 12), 2)
    for c, age in enumerate(ages):
        child = f"Kid{c:02d}"
        corpus = "FixA" if c % 2 == 0 else "FixB"
        body = _session_lines(rng, float(age), 34)
        files[f"{corpus}_{child}_s1.cha"] = "\n".join(
            _header(corpus, child, _chat_age(float(age)), "free play at home") + body + ["@End"]) + "\n"
    # excluded by activity keyword
    body = _session_lines(rng, 5.0, 12)
    files["FixA_Kid02_book.cha"] = "\n".join(
        _header("FixA", "Kid02", "5;00.00", "shared book reading") + body + ["@End"]) + "\n"
    # excluded by age
    body = _session_lines(rng, 11.0, 12)
    files["FixB_Old01_s1.cha"] = "\n".join(
        _header("FixB", "Old01", "11;02.00", "free play") + body + ["@End"]) + "\n"
    # kept, but every child turn is unintelligible: contributes no pairs
    body = _session_lines(rng, 6.0, 8, child_noise_only=True)
    files["FixA_Kid04_noise.cha"] = "\n".join(
        _header("FixA", "Kid04", _chat_age(float(ages[4])), "free play") + body + ["@End"]) + "\n"
    return files


def build_ratings(corpus_dir: Path, seed: int = 7, n_items: int = 60) -> str:
    """Three synthetic raters over a stratified sample of fixture pairs.

    Raters start from the mock judge's labels and perturb them, so the
    agreement statistics land somewhere between chance and perfect.
    """
    import io

    from childtalk.agreement import RatingsMatrix, stratified_sample, write_ratings_csv
    from childtalk.corpus import ingest_directory, detect_hesitation_only
    from childtalk.judge.mock import mock_judge
    from childtalk.judge.taxonomy import PT_ORDER

    _, pairs = ingest_directory(corpus_dir)
    pairs = [p for p in pairs if not detect_hesitation_only(p.child)]
    sample = stratified_sample(pairs, n_items, lambda p: int(p.child_age_years), seed=seed)
    rng = np.random.default_rng(seed + 1)
    pt_rows, e_rows, i_rows = [], [], []
    for p in sample:
        pt, ei = mock_judge(p)
        pt_rows.append([pt.subtype.value if rng.random() > 0.25
                        else PT_ORDER[rng.integers(len(PT_ORDER))].value for _ in range(3)])
        e_rows.append([int(np.clip(ei.expansion + rng.integers(-1, 2), 1, 10)) for _ in range(3)])
        i_rows.append([int(np.clip(ei.independence + rng.integers(-1, 2), 1, 10)) for _ in range(3)])
    ids = [p.pair_id for p in sample]
    raters = ["r1", "r2", "r3"]
    mats = {
        "PT": RatingsMatrix(pt_rows, "nominal", ids, raters),
        "E": RatingsMatrix(e_rows, "ordinal", ids, raters),
        "I": RatingsMatrix(i_rows, "ordinal", ids, raters),
    }
    buf = io.StringIO()
    write_ratings_csv(mats, buf)
    return buf.getvalue()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1]
                                         / "src" / "childtalk" / "data" / "fixture_corpus"))
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(build(args.seed).items()):
        (out / name).write_text(text, encoding="utf-8")
        print(out / name)
    ratings = out.parent / "fixture_ratings.csv"
    ratings.write_text(build_ratings(out, args.seed), encoding="utf-8")
    print(ratings)


if __name__ == "__main__":
    main()
