#!/usr/bin/env python3
"""Generate the reward fixture corpus and the judge stub table.

Expected scores come from small Python oracles written independently of the
C++ verifiers: Fraction arithmetic for numbers and IoU, a textbook DP for
edit distance, brute-force matching for grounding, brute-force substring
scans for the repetition check.
"""

import argparse
import itertools
import json
import random
import re
from fractions import Fraction
from pathlib import Path

BOX_B = "<|begin_of_box|>"
BOX_E = "<|end_of_box|>"
WS = " \t\n\r\f\v"

RTOL_MATH = Fraction(1, 10**4)
RTOL_CHART = Fraction(5, 10**3)
TAU = Fraction(1, 2)
MIN_REPEAT = 8
STYLE_LIMIT = 0.3


# judge stub table: (reference, candidate) -> equivalent
STUB = {
    ("3.0 m/s", "3 m/s"): True,
    ("9.8 m/s^2", "9.80 m/s^2"): True,
    ("2 mol", "two moles"): True,
    ("0.1 mol/L", "0.1 M"): True,
    ("1/2", "0.5"): True,
    ("0.5", "1/2"): True,
    ("300 K", "27 degrees celsius"): True,
    ("5 kg", "5000 g"): True,
    ("5 kg", "5 g"): False,
    ("12 N", "12 J"): False,
    ("the treaty ended the war", "the war was ended by the treaty"): True,
    ("revenue grew in 2020", "sales went up in 2020"): True,
    ("the author disagrees", "the author agrees"): False,
    ("paris, france", "paris"): True,
    ("kyoto", "osaka"): False,
    ("a red bus", "a crimson bus"): True,
    ("the cat", "a feline"): True,
    ("x=2", "x=3"): False,
    ("open settings", "open the settings page"): True,
}


# numbers

NUM_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


def plain_number(s):
    if not NUM_RE.match(s):
        return None
    sign = -1 if s.startswith("-") else 1
    body = s.lstrip("+-")
    return sign * Fraction(body)


def parse_number(s):
    s = s.strip(WS)
    scale = Fraction(1)
    if s.endswith("%"):
        scale = Fraction(1, 100)
        s = s[:-1].strip(WS)
    if "/" in s:
        a, b = s.split("/", 1)
        a, b = plain_number(a.strip(WS)), plain_number(b.strip(WS))
        if a is None or b is None or b == 0:
            return None
        return a / b * scale
    v = plain_number(s)
    return None if v is None else v * scale


def numeric_equal(cand, ref, rtol):
    a, b = parse_number(cand), parse_number(ref)
    return abs(a - b) <= rtol * max(abs(b), Fraction(1, 10**12))


def normalize(s):
    s = s.strip(WS)
    out = re.sub(r"[ \t\n\r\f\v]+", " ", s)
    return "".join(chr(ord(c) + 32) if "A" <= c <= "Z" else c for c in out)


def has_unit(s):
    for m in re.finditer(r"\d[\d.]*(?:[eE][+-]?\d+)?", s):
        rest = s[m.end():].lstrip(" ")
        if rest and (rest[0].isascii() and rest[0].isalpha() or ord(rest[0]) >= 0x80):
            return True
    return False


def judge(ref, cand):
    if normalize(ref) == normalize(cand):
        return True
    return STUB.get((ref, cand), False)


def numeric_exact_judge(ref, cand, rtol):
    if parse_number(cand) is not None and parse_number(ref) is not None:
        return numeric_equal(cand, ref, rtol)
    return judge(ref, cand)


def year(s):
    s = s.strip(WS)
    if len(s) == 4 and all("0" <= c <= "9" for c in s) and 1000 <= int(s) <= 2100:
        return int(s)
    return None


# OCR

def edit_distance(a, b):
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[len(a)][len(b)]


def ocr_score(cand, ref):
    m = max(len(cand), len(ref))
    if m == 0:
        return 1.0
    return 1.0 - edit_distance(cand, ref) / m


# boxes

def iou(a, b):
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return Fraction(0)
    inter = Fraction(iw * ih)
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


def best_matching(pred, gt, tau):
    best = 0
    k = min(len(pred), len(gt))
    for chosen in itertools.permutations(range(len(pred)), k):
        best = max(best, sum(1 for g, p in enumerate(chosen) if iou(gt[g], pred[p]) > tau))
    return best


def greedy_matching(pred, gt, tau):
    pairs = sorted(((-iou(gt[g], pred[p]), tuple(gt[g]), tuple(pred[p]), g, p)
                    for g in range(len(gt)) for p in range(len(pred))))
    used_g, used_p, n = set(), set(), 0
    for neg, _, _, g, p in pairs:
        if -neg <= tau:
            break
        if g in used_g or p in used_p:
            continue
        used_g.add(g)
        used_p.add(p)
        n += 1
    return n


# style

def is_latin(c):
    return "A" <= c <= "Z" or "a" <= c <= "z"


def is_cjk(c):
    return 0x4E00 <= ord(c) <= 0x9FFF or 0x3400 <= ord(c) <= 0x4DBF


def mixed_ratio(s):
    seq = [0 if is_latin(c) else 1 for c in s if is_latin(c) or is_cjk(c)]
    if len(seq) < 2:
        return 0.0
    return sum(1 for x, y in zip(seq, seq[1:]) if x != y) / (len(seq) - 1)


def count_nonoverlap(s, block):
    n, i = 0, 0
    while True:
        j = s.find(block, i)
        if j < 0:
            return n
        n += 1
        i = j + len(block)


def repeat_fraction(s):
    if not s:
        return 0.0
    for length in range(len(s) // 3, MIN_REPEAT - 1, -1):
        for start in range(len(s) - length + 1):
            if count_nonoverlap(s, s[start:start + length]) >= 3:
                return length / len(s)
    return 0.0


def style_ok(*segments):
    return all(mixed_ratio(s) <= STYLE_LIMIT and repeat_fraction(s) <= STYLE_LIMIT for s in segments)


# scoring of a bare answer payload

def payload_score(domain, ref, ans, rtol_math=RTOL_MATH, rtol_chart=RTOL_CHART):
    ans = ans.strip(WS)
    if domain in ("math", "physics", "chemistry"):
        if domain != "math" and (has_unit(ans) or has_unit(ref)):
            return float(judge(ref, ans))
        return float(numeric_exact_judge(ref, ans, rtol_math))
    if domain == "chart":
        ya, yr = year(ans), year(ref)
        if ya is not None and yr is not None:
            return float(ya == yr)
        return float(numeric_exact_judge(ref, ans, rtol_chart))
    if domain in ("vqa", "spatial", "video"):
        return float(numeric_exact_judge(ref, ans, rtol_math))
    if domain in ("long_document", "geoguess"):
        return float(judge(ref, ans))
    if domain == "ocr":
        return ocr_score(ans, ref)
    if domain == "grounding":
        gt = json.loads(ref)
        gt = [gt] if gt and not isinstance(gt[0], list) else gt
        try:
            pred = json.loads(ans)
        except json.JSONDecodeError:
            return 0.0
        pred = [pred] if pred and not isinstance(pred[0], list) else pred
        if not pred:
            return 0.0
        return best_matching(pred, gt, TAU) / len(gt)
    if domain == "gui_agent":
        g = json.loads(ref)
        p = json.loads(ans)
        sub = g.get("subtask", "action")
        if sub == "action":
            if p["action"] != g["action"] or ("box" in p) != ("box" in g):
                return 0.0
            if "box" in g and iou(p["box"], g["box"]) < TAU:
                return 0.0
            if ("text" in p) != ("text" in g) or p.get("text", "").strip(WS) != g.get("text", "").strip(WS):
                return 0.0
            return 1.0
        if sub == "grounding":
            return float("box" in p and "box" in g and iou(p["box"], g["box"]) >= TAU)
        return float(judge(g.get("text", ""), p.get("text", "")))
    raise ValueError(domain)


# case builders

class Corpus:
    def __init__(self):
        self.cases = []

    def add(self, domain, reference, candidate, expect, *, verifiable=True, question="", tol=1e-9, tag="", **over):
        case = {
            "id": f"{domain}-{len(self.cases):04d}{('-' + tag) if tag else ''}",
            "domain": domain,
            "question": question,
            "reference": reference,
            "candidate": candidate,
            "verifiable": verifiable,
            "expect_score": expect,
            "tol": tol,
        }
        case.update(over)
        self.cases.append(case)

    def plain(self, domain, reference, answer, tag="", **over):
        """Bare answer text; style still applies to it."""
        kw = {}
        if "rtol_chart" in over:
            kw["rtol_chart"] = Fraction(over["rtol_chart"]).limit_denominator(10**9)
        expect = payload_score(domain, reference, answer, **kw) if style_ok(answer) else 0.0
        self.add(domain, reference, answer, expect, tag=tag, tol=1e-12, **over)

    def templated(self, domain, reference, think, payload, lead="", tag=""):
        answer = f"{lead}{BOX_B}{payload}{BOX_E}"
        raw = f"<think>{think}</think><answer>{answer}</answer>"
        expect = payload_score(domain, reference, payload) if style_ok(think, answer) else 0.0
        self.add(domain, reference, raw, expect, tag=tag or "templated", tol=1e-12)


def fmt(x):
    return format(x, ".10g")


def worked_examples(c):
    # parser and template behaviour, scored through the math verifier
    c.add("math", "y", "<think>x</think><answer>y</answer>", 1.0, tag="tagged")
    c.add("math", "y", "<think>x</think>y", 1.0, tag="untagged-answer")
    c.add("math", "y", "<answer>y</answer><think>x</think>", 0.0, tag="order-violation")
    c.add("math", "42", "The answer is <|begin_of_box|>42<|end_of_box|>.", 1.0, tag="boxed")
    c.add("math", "1", "<|begin_of_box|>1<|end_of_box|> <|begin_of_box|>2<|end_of_box|>", 0.0, tag="two-boxes")
    c.add("math", "7", "<think>x<answer>7</answer>", 0.0, tag="missing-close")
    c.add("math", "7", "<think>x</think><answer>  </answer>", 0.0, tag="empty-answer")
    c.add("math", "7", "<think>x</think><answer><|begin_of_box|>7</answer>", 0.0, tag="unbalanced-box")
    c.add("math", "7", "<think>step</think><answer><|begin_of_box|>7<|end_of_box|></answer>", 1.0, tag="correct-boxed")
    c.add("long_document", "the treaty ended the war",
          "<think>read</think><answer><|begin_of_box|>the treaty ended the war<|end_of_box|></answer>", 0.0,
          verifiable=False, tag="nonverifiable-box")
    c.add("long_document", "the treaty ended the war",
          "<think>read</think><answer>the war was ended by the treaty</answer>", 1.0, verifiable=False,
          tag="nonverifiable-plain")
    # numeric equivalence
    c.add("math", "43.0", "43", 1.0, tag="43-vs-43.0")
    c.add("ocr", "43.0", "43", ocr_score("43", "43.0"), tol=1e-12, tag="43-vs-43.0")
    c.add("math", "0.5", "1/2", 1.0, tag="fraction")
    c.add("math", "44", "43", 0.0, tag="off-by-one")
    c.add("math", "0.5", "0.5000", 1.0)
    c.add("physics", "3.0 m/s", "3 m/s", 1.0, tag="unit-judge")
    c.add("math", "x=3", "x=2", 0.0, tag="symbolic")
    # ocr
    c.add("ocr", "hello", "hello", 1.0)
    c.add("ocr", "hello", "helo", 0.8, tol=1e-12)
    c.add("ocr", "abc", "", 0.0)
    # chart
    c.add("chart", "2020", "2019", 0.0, tag="year")
    c.add("chart", "41.80", "41.8", 1.0)
    c.add("chart", "12.4", "12.3", 1.0, rtol_chart=1e-2, tag="rtol-1e-2")
    c.add("chart", "12.4", "12.3", 0.0, tag="rtol-default")
    # grounding
    c.add("grounding", "[[0,0,2,2],[1,0,3,2]]", "[[0,0,2,2],[1,0,3,2]]", 1.0)
    c.add("grounding", "[[0,0,10,10],[20,20,30,30]]", "[[0,0,10,10],[50,50,60,60]]", 0.5)
    c.add("grounding", "[[0,0,10,10]]", "[]", 0.0, tag="empty-pred")
    c.add("grounding", "[1,0,3,2]", "[0,0,2,2]", 0.0, tag="iou-third")
    # gui agent
    click = {"action": "click", "box": [100, 100, 200, 200]}
    c.add("gui_agent", json.dumps(click), json.dumps(click), 1.0)
    c.add("gui_agent", json.dumps(click), json.dumps({"action": "scroll", "box": [100, 100, 200, 200]}), 0.0)
    c.add("gui_agent", json.dumps({"action": "click", "box": [0, 0, 10, 10]}),
          json.dumps({"action": "click", "box": [0, 0, 10, 4]}), 0.0, tag="iou-0.4")
    # generic
    c.add("vqa", "4", "4", 1.0)
    c.add("long_document", "the treaty ended the war", "the war was ended by the treaty", 1.0, tag="paraphrase")
    c.add("spatial", "left", "right", 0.0)
    # style penalty
    looped = "we add two and two to get four. " * 3
    assert repeat_fraction(looped) > STYLE_LIMIT
    c.add("math", "4", f"<think>{looped}</think><answer><|begin_of_box|>4<|end_of_box|></answer>", 0.0,
          tag="repetition")
    periodic = "we add two and two. " * 8  # blocks of 40 recur only three times in 160
    assert repeat_fraction(periodic) == 0.25
    c.add("math", "4", f"<think>{periodic}</think><answer><|begin_of_box|>4<|end_of_box|></answer>", 1.0,
          tag="repetition-below-limit")
    c.add("math", "4", "<think>中a文b字c混d合e用f</think><answer><|begin_of_box|>4<|end_of_box|></answer>", 0.0,
          tag="mixed-script")


def random_cases(c, rng):
    think_pool = ["compute the total", "read the axis labels", "compare both regions",
                  "count the objects", "check the units first", "look at the second paragraph"]

    def number():
        kind = rng.randrange(4)
        if kind == 0:
            return str(rng.randrange(-500, 500))
        if kind == 1:
            return fmt(rng.randrange(1, 10**6) / 10 ** rng.randrange(1, 4))
        if kind == 2:
            return f"{rng.randrange(1, 50)}/{rng.randrange(1, 50)}"
        return f"{rng.randrange(1, 100)}%"

    def variant(ref, rtol):
        v = parse_number(ref)
        kind = rng.randrange(4)
        if kind == 0:
            return ref
        if kind == 1:  # same value, other spelling
            return fmt(float(v)) if "/" not in ref else fmt(float(v))
        if kind == 2:  # well inside tolerance
            return fmt(float(v * (1 + rtol / 4))) if v != 0 else "0.0"
        return fmt(float(v * (1 + 5 * rtol) + (1 if v == 0 else 0)))  # well outside

    for domain, rtol in (("math", RTOL_MATH), ("vqa", RTOL_MATH), ("video", RTOL_MATH), ("chart", RTOL_CHART),
                         ("physics", RTOL_MATH), ("chemistry", RTOL_MATH)):
        for _ in range(14):
            ref = number()
            cand = variant(ref, rtol)
            if rng.random() < 0.5:
                c.plain(domain, ref, cand, tag="numeric")
            else:
                c.templated(domain, ref, rng.choice(think_pool), cand, lead=rng.choice(["", "So ", "Result: "]))
    for _ in range(8):
        y = rng.randrange(1950, 2030)
        c.plain("chart", str(y), str(y + rng.choice([0, 0, 1, -1])), tag="year")
    units = [("physics", "3.0 m/s", "3 m/s"), ("physics", "9.8 m/s^2", "9.80 m/s^2"), ("chemistry", "2 mol", "two moles"),
             ("chemistry", "0.1 mol/L", "0.1 M"), ("physics", "300 K", "27 degrees celsius"),
             ("physics", "5 kg", "5000 g"), ("physics", "5 kg", "5 g"), ("physics", "12 N", "12 J"),
             ("chemistry", "4 g", "4 g"), ("physics", "7 s", "8 s")]
    for dom, ref, cand in units:
        c.plain(dom, ref, cand, tag="unit")

    words = ["left", "right", "above", "below", "red", "blue", "three", "cat", "dog", "north"]
    for domain in ("spatial", "vqa", "video"):
        for _ in range(6):
            ref = rng.choice(words)
            cand = rng.choice([ref, ref.upper(), "  " + ref, rng.choice(words)])
            c.plain(domain, ref, cand, tag="word")
    pairs = [(r, k) for (r, k) in STUB if not has_unit(r)]
    for domain in ("long_document", "geoguess"):
        for ref, cand in pairs:
            c.plain(domain, ref, cand, tag="semantic")
        for _ in range(4):
            ref = rng.choice(["kyoto", "paris", "lima", "oslo"])
            c.plain(domain, ref, rng.choice([ref, ref.title(), "cairo"]), tag="place")

    latin = "abcdefghijklmnopqrstuvwxyz0123456789éüß"
    cjk = "的一是不了人我在有他这中大来上国个到说们"
    for _ in range(40):
        alphabet = latin if rng.random() < 0.6 else cjk
        ref = "".join(rng.choice(alphabet) for _ in range(rng.randrange(1, 16)))
        cand = list(ref)
        for _ in range(rng.randrange(0, 4)):
            op = rng.randrange(3)
            pos = rng.randrange(len(cand) + 1)
            if op == 0:
                cand.insert(pos, rng.choice(alphabet))
            elif op == 1 and cand:
                del cand[min(pos, len(cand) - 1)]
            elif cand:
                cand[min(pos, len(cand) - 1)] = rng.choice(alphabet)
        cand = "".join(cand)
        if rng.random() < 0.5:
            c.plain("ocr", ref, cand, tag="random")
        else:
            c.templated("ocr", ref, rng.choice(think_pool), cand)

    def rand_box():
        x1, y1 = rng.randrange(0, 900), rng.randrange(0, 900)
        return [x1, y1, x1 + rng.randrange(5, 100), y1 + rng.randrange(5, 100)]

    def jitter(b):
        d = rng.randrange(0, 30)
        x1 = min(max(b[0] + rng.randrange(-d, d + 1), 0), b[2] - 1)
        y1 = min(max(b[1] + rng.randrange(-d, d + 1), 0), b[3] - 1)
        return [x1, y1, b[2], b[3]]

    made = 0
    while made < 20:
        gt = [rand_box() for _ in range(rng.randrange(1, 4))]
        pred = [jitter(b) for b in gt if rng.random() < 0.8] + [rand_box() for _ in range(rng.randrange(0, 2))]
        rng.shuffle(pred)
        if pred and greedy_matching(pred, gt, TAU) != best_matching(pred, gt, TAU):
            continue
        ref = json.dumps(gt)
        cand = json.dumps(pred)
        if rng.random() < 0.5:
            c.plain("grounding", ref, cand, tag="random")
        else:
            c.templated("grounding", ref, "locate every instance", cand)
        made += 1

    actions = ["click", "long_press", "scroll", "type"]
    for _ in range(16):
        g = {"action": rng.choice(actions), "box": rand_box()}
        if g["action"] == "type":
            g["text"] = rng.choice(["hello", "search query"])
        p = dict(g)
        r = rng.randrange(4)
        if r == 1:
            p["box"] = jitter(g["box"])
        elif r == 2:
            p["action"] = rng.choice(actions)
        elif r == 3 and "text" in g:
            p["text"] = "other"
        c.plain("gui_agent", json.dumps(g), json.dumps(p), tag="action")
    for _ in range(6):
        b = rand_box()
        g = {"action": "click", "box": b, "subtask": "grounding"}
        c.plain("gui_agent", json.dumps(g), json.dumps({"action": "click", "box": jitter(b)}), tag="grounding")
    for ref, cand in [("open settings", "open the settings page"), ("open settings", "Open Settings"),
                      ("open settings", "close settings")]:
        g = {"action": "answer", "text": ref, "subtask": "qa"}
        c.plain("gui_agent", json.dumps(g), json.dumps({"action": "answer", "text": cand}), tag="qa")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "fixtures"))
    ap.add_argument("--seed", type=int, default=20240611)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    c = Corpus()
    worked_examples(c)
    random_cases(c, random.Random(args.seed))

    with open(out / "reward_cases.jsonl", "w", encoding="utf-8") as f:
        for case in c.cases:
            f.write(json.dumps(case, ensure_ascii=False) + "\n")
    with open(out / "judge_stub.jsonl", "w", encoding="utf-8") as f:
        for (ref, cand), eq in STUB.items():
            f.write(json.dumps({"reference": ref, "candidate": cand, "equivalent": eq}, ensure_ascii=False) + "\n")
    domains = sorted({case["domain"] for case in c.cases})
    print(f"{len(c.cases)} cases across {len(domains)} domains")


if __name__ == "__main__":
    main()
