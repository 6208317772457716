#!/usr/bin/env python3
"""Regenerates the replay bundles, sample graphs and toy setup under fixtures/.

The expected scratchpads are rendered here from the step data with an
implementation of the observation templates that is independent of the C++
engine, so the replay test compares two separate renderings.

Usage: python3 fixtures/make_fixtures.py
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent

MISS = ("The node or feature name does not exist in the graph. This might because your given feature name "
        "is not correct. Please modify it.")
SUFFIX = " Please answer by providing node main feature (e.g., names) rather than node IDs."


def obs_retrieve(node):
    return f"The ID of this retrieval target node is {node}."


def obs_feature(graph, node, feature):
    value = graph["nodes"].get(node, {}).get("features", {}).get(feature)
    if value is None:
        return MISS
    return f"The {feature} feature of {node} are: {value}."


def obs_neighbours(graph, node, label):
    targets = graph["edges"].get(node, {}).get(label)
    if node not in graph["nodes"]:
        return MISS
    targets = targets or []
    return f"The {label} neighbors of {node} are: [{', '.join(repr(t) for t in targets)}]."


def render(steps):
    out = []
    for k, s in enumerate(steps, 1):
        out.append(f"Plan {k}: {s['plan']}\n")
        out.append(f"Thought {k}: {s['thought']}\n")
        out.append(f"Action {k}: {s['action']}\n")
        if s.get("obs") is not None:
            out.append(f"Observation {k}: {s['obs']}\n")
    return "".join(out)


def script_for_attempt(question, steps, first_plan_match, replies=None):
    """One entry per backend call of the inner loop. `replies` may override
    the raw text the model returns for (step, role)."""
    replies = replies or {}
    entries = []
    for k, s in enumerate(steps, 1):
        plan_match = first_plan_match if k == 1 else f"Observation {k - 1}: {steps[k - 2]['obs']}\nPlan {k}:"
        entries.append({"match": plan_match, "reply": replies.get((k, "plan"), s["plan"])})
        entries.append({"match": f"Plan {k}: {s['plan']}\nThought {k}:",
                        "reply": replies.get((k, "thought"), s["thought"])})
        entries.append({"match": f"Thought {k}: {s['thought']}\nAction {k}:",
                        "reply": replies.get((k, "action"), s["action"])})
    return entries


def last_line_match(steps, tail):
    k = len(steps)
    last = steps[-1]
    if last.get("obs") is None:
        return f"Action {k}: {last['action']}\n{tail}"
    return f"Observation {k}: {last['obs']}\n{tail}"


def write_json(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, ensure_ascii=False) + "\n")


# --- amazon -------------------------------------------------------------------

def amazon():
    rng = random.Random(520)
    alphabet = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    target, phone, brand = "B00BRPTT9K", "B00E45043A", "brand_70532"
    kinds = ["Hard Case", "Screen Protector", "Car Charger", "Wall Charger", "USB Cable", "Flip Cover",
             "Silicone Skin", "Stylus Pen", "Armband", "Headset", "Battery", "Holster"]
    colours = ["Black", "Blue", "Red", "Green", "Yellow", "Pink", "Clear", "Purple"]
    others = []
    while len(others) < 48:
        asin = "B00" + "".join(rng.choice(alphabet) for _ in range(7))
        if asin not in (target, phone) and asin not in others:
            others.append(asin)

    nodes, edges = {}, {}
    nodes[target] = {"features": {
        "title": "Nokia CC-3068 Shell for Lumia 520 - Retail Packaging - White",
        "description": "Snap-on shell that replaces the back cover of the Lumia 520.",
        "price": "9.99", "img": "", "category": "Cell Phones & Accessories"}}
    nodes[phone] = {"features": {
        "title": "Nokia Lumia 520 GoPhone (AT&T)",
        "description": "Windows Phone 8 smartphone with a 4-inch display.",
        "price": "59.99", "img": "", "category": "Cell Phones & Accessories"}}
    for i, asin in enumerate(others):
        title = f"{kinds[i % len(kinds)]} for Lumia 520 - {colours[(i // len(kinds)) % len(colours)]} (pack {i + 1})"
        nodes[asin] = {"features": {"title": title, "description": "", "price": f"{4 + (i % 9)}.99",
                                    "img": "", "category": "Cell Phones & Accessories"}}
    nodes[brand] = {"features": {"name": "Nokia", "catalog": f"{target} {phone}"}}

    bought_with_phone = others[:16] + [target] + others[16:]
    edges[target] = {"bought_together_item": [phone], "item_to_brand": [brand]}
    edges[phone] = {"bought_together_item": bought_with_phone, "item_to_brand": [brand]}
    for asin in others:
        edges[asin] = {"bought_together_item": [phone]}
    edges[brand] = {"brand_to_item": [target, phone]}
    graph = {"nodes": nodes, "edges": edges}
    assert len(bought_with_phone) == 49

    question = ("What is the quantity of items sharing the same purchased-together items as item "
                "Nokia CC-3068 Shell for Lumia 520 - Retail Packaging - White?")
    title = nodes[target]["features"]["title"]
    common = [
        {"plan": "The question is asking for the count of items that share the same bought_together_item neighbors "
                 "as the specified item, excluding the original item. We need to locate the specified item, list its "
                 "bought_together_item neighbors, and then find other items that share these neighbors. Finally, we "
                 "need to exclude the original item and count the remaining items.",
         "thought": "We need to find the node in the graph that represents the specified item.",
         "action": f"Retrieve[{title}]",
         "obs": obs_retrieve(target)},
        {"plan": "We have the node representing the specified item. Next, we need to list its bought_together_item "
                 "neighbors.",
         "thought": "We need to retrieve the bought_together_item neighbors of the specified item.",
         "action": f"Neighbour[{target}, bought_together_item]",
         "obs": obs_neighbours(graph, target, "bought_together_item")},
        {"plan": "We have the bought_together_item neighbors of the specified item. Next, we need to find other items "
                 "that share these neighbors.",
         "thought": "We need to find items that share the same bought_together_item neighbors as the specified item.",
         "action": f"Neighbour[{phone}, bought_together_item]",
         "obs": obs_neighbours(graph, phone, "bought_together_item")},
    ]
    plan4 = ("We have the list of items that share the same bought_together_item neighbors as the specified item. "
             "Next, we need to filter out the original item and count the remaining items.")
    thought4 = f"We need to filter out the original item ({target}) from the list and count the remaining items."
    wrong = common + [
        {"plan": plan4, "thought": thought4, "action": f"Feature[Retrieve[{target}], title]",
         "obs": obs_retrieve(brand) + " " + obs_feature(graph, brand, "title")},
        {"plan": "It seems there was an error in retrieving the title of the original item. We will directly filter "
                 "out the original item from the list and count the remaining items.",
         "thought": thought4, "action": "Finish[49]", "obs": None},
    ]
    right = common + [{"plan": plan4, "thought": thought4, "action": "Finish[48]", "obs": None}]

    reflection = (ROOT / "amazon" / "reflection_reply.txt").read_text()
    first_plan = f"Question: {question}{SUFFIX}\nPlan 1:"
    # Model replies that carry their own label or run on into the next role
    # exercise the reply cleaning; the stored text stays the same.
    messy = {(1, "plan"): f"Plan 1: {wrong[0]['plan']}\nThought 1: {wrong[0]['thought']}",
             (2, "action"): f"{wrong[1]['action']}\nObservation 2: (the model guessed here)"}
    script = script_for_attempt(question, wrong, first_plan, messy)
    script.append({"match": last_line_match(wrong, "Proceed with explanation and judgment below:"),
                   "reply": "The question asks for the items that share the purchased-together item, excluding the "
                            "original item. The list of 49 nodes includes B00BRPTT9K itself, so the answer 49 counts "
                            "the original item as well. Judgment: [no]"})
    script.append({"match": last_line_match(wrong, "Reflection:"), "reply": reflection})
    reflection_tail = reflection.split("(END OF REFLECTION)")[0].strip().splitlines()[-1].strip()
    script += script_for_attempt(question, right, f"{reflection_tail}\nWhen last Observation has been given")
    script.append({"match": last_line_match(right, "Proceed with explanation and judgment below:"),
                   "reply": "The neighbor list of B00E45043A holds 49 items including the original item; removing it "
                            "leaves 48, which is the answer given. [yes]"})

    out = ROOT / "amazon"
    write_json(out / "graph.json", graph)
    write_json(out / "script.json", script)
    (out / "attempt1.txt").write_text(render(wrong))
    (out / "attempt2.txt").write_text(render(right))
    write_json(out / "fixture.json", {
        "graph": "graph.json", "prompts": "../../prompts/amazon", "retrieval_fields": ["title", "name", "catalog"],
        "script": "script.json", "question": question, "max_steps": 10, "max_reflections": 2,
        "expected": {"answer": "48", "correct": True, "attempts": 2, "reflections": 1,
                     "scratchpads": ["attempt1.txt", "attempt2.txt"]}})


# --- biomedical ---------------------------------------------------------------

ANATOMY = [
    ("UBERON:0001690", "ear"), ("UBERON:0001691", "external ear"), ("UBERON:0001037", "strand of hair"),
    ("UBERON:0002097", "skin of body"), ("UBERON:0000004", "nose"), ("UBERON:0001711", "eyelid"),
    ("UBERON:0001456", "face"), ("UBERON:0000033", "head"), ("UBERON:0001137", "dorsum"),
    ("UBERON:0001416", "skin of abdomen"), ("UBERON:0002101", "limb"), ("UBERON:0001460", "arm"),
    ("UBERON:0000978", "leg"), ("UBERON:0002398", "manus"), ("UBERON:0002387", "pes"),
    ("UBERON:0001088", "urine"), ("UBERON:0000014", "zone of skin"), ("UBERON:0001003", "skin epidermis"),
    ("UBERON:0002067", "dermis"), ("UBERON:0001135", "smooth muscle tissue"), ("UBERON:0000029", "lymph node"),
    ("UBERON:0002106", "spleen"), ("UBERON:0000178", "blood"), ("UBERON:0002371", "bone marrow"),
    ("UBERON:0001986", "endothelium"), ("UBERON:0000310", "breast"), ("UBERON:0002048", "lung"),
    ("UBERON:0000955", "brain"), ("UBERON:0002107", "liver"), ("UBERON:0000948", "heart"),
    ("UBERON:0001052", "rectum"), ("UBERON:0001155", "colon"), ("UBERON:0000059", "large intestine"),
    ("UBERON:0002108", "small intestine"), ("UBERON:0000945", "stomach"), ("UBERON:0001043", "esophagus"),
]


def biomedical():
    nodes, edges = {}, {}
    def add(node, name):
        nodes[node] = {"features": {"name": name}}
    add("DB00591", "Fluocinolone Acetonide")
    add("DB01047", "Fluocinonide")
    add("DB00620", "Triamcinolone")
    add("DOID:3310", "atopic dermatitis")
    add("DOID:8893", "psoriasis")
    add("DOID:2723", "dermatitis")
    for node, name in ANATOMY:
        add(node, name)
    ids = [a for a, _ in ANATOMY]
    dermatitis_sites = ids[:17]
    psoriasis_sites = ids[3:8] + ids[17:36]
    assert len(dermatitis_sites) == 17 and len(psoriasis_sites) == 24
    edges["DB00591"] = {"Compound-treats-Disease": ["DOID:3310", "DOID:8893"]}
    edges["DB01047"] = {"Compound-treats-Disease": ["DOID:8893"]}
    edges["DB00620"] = {"Compound-treats-Disease": ["DOID:3310", "DOID:2723"]}
    edges["DOID:3310"] = {"Disease-localizes-Anatomy": dermatitis_sites}
    edges["DOID:8893"] = {"Disease-localizes-Anatomy": psoriasis_sites}
    edges["DOID:2723"] = {"Disease-localizes-Anatomy": ["UBERON:0002097"]}
    graph = {"nodes": nodes, "edges": edges}

    question = "What illness situated in ear can be treated by Fluocinolone Acetonide?"
    plan_head = "The question is asking for a disease localized in the ear that can be treated by Fluocinolone Acetonide."
    n3, n4 = "Neighbour[DOID:3310, Disease-localizes-Anatomy]", "Neighbour[DOID:8893, Disease-localizes-Anatomy]"
    obs_sites = (obs_neighbours(graph, "DOID:3310", "Disease-localizes-Anatomy") + " " +
                 obs_neighbours(graph, "DOID:8893", "Disease-localizes-Anatomy"))
    anat3 = ["UBERON:0001690", "UBERON:0001691", "UBERON:0001037"]
    feat3 = ", ".join(f"Feature[{a}, name]" for a in anat3)
    obs_feat3 = " ".join(obs_feature(graph, a, "name") for a in anat3)
    feat2 = "Feature[UBERON:0001690, name], Feature[UBERON:0001691, name]"
    obs_feat2 = " ".join(obs_feature(graph, a, "name") for a in anat3[:2])
    dnames = "Feature[DOID:3310, name], Feature[DOID:8893, name]"
    obs_dnames = obs_feature(graph, "DOID:3310", "name") + " " + obs_feature(graph, "DOID:8893", "name")

    opening = [
        {"plan": f"{plan_head} We need to find the node representing the compound and then identify the diseases it "
                 "treats. Next, we need to check which of these diseases are localized in the ear.",
         "thought": "We need to find the node representing Fluocinolone Acetonide in the graph.",
         "action": "Retrieve[Fluocinolone Acetonide]", "obs": obs_retrieve("DB00591")},
        {"plan": f"{plan_head} We have the node representing the compound. Next, we need to find the diseases that "
                 "this compound treats.",
         "thought": "We need to find the diseases that Fluocinolone Acetonide treats.",
         "action": "Neighbour[DB00591, Compound-treats-Disease]",
         "obs": obs_neighbours(graph, "DB00591", "Compound-treats-Disease")},
        {"plan": f"{plan_head} We have the diseases that this compound treats. Next, we need to check which of these "
                 "diseases are localized in the ear.",
         "thought": "We need to check the anatomical locations of the diseases 'DOID:3310' and 'DOID:8893'.",
         "action": f"{n3}, {n4}", "obs": obs_sites},
        {"plan": f"{plan_head} We have the anatomical locations of the diseases. Next, we need to identify which of "
                 "these locations correspond to the ear.",
         "thought": "We need to get the names of the anatomical locations to identify which ones correspond to the ear.",
         "action": feat3, "obs": obs_feat3},
    ]
    plan5 = (f"{plan_head} We have the names of the anatomical locations. Next, we need to identify which of these "
             "locations correspond to the ear and then get the names of the diseases associated with these locations.")
    wrong = opening + [
        {"plan": plan5, "thought": "We need to identify the diseases associated with the ear and external ear.",
         "action": dnames, "obs": obs_dnames},
        {"plan": f"{plan_head} We have the names of the diseases. Next, we need to verify which of these diseases are "
                 "localized in the ear.",
         "thought": "We need to verify which of the diseases 'atopic dermatitis' and 'psoriasis' are localized in the ear.",
         "action": dnames, "obs": obs_dnames},
        {"plan": f"{plan_head} We have the names of the diseases. We need to verify which of these diseases are "
                 "localized in the ear.",
         "thought": "We need to verify the anatomical locations of 'atopic dermatitis' and 'psoriasis' again to ensure "
                    "they are localized in the ear.",
         "action": f"{n3}, {n4}", "obs": obs_sites},
        {"plan": f"{plan_head} We have the anatomical locations of the diseases. Next, we need to identify which of "
                 "these locations correspond to the ear.",
         "thought": "We need to get the names of the anatomical locations to identify which ones correspond to the ear.",
         "action": feat2, "obs": obs_feat2},
        {"plan": f"{plan_head} We have the names of the anatomical locations. Next, we need to verify which of these "
                 "diseases are localized in the ear.",
         "thought": "We need to verify which of the diseases 'atopic dermatitis' and 'psoriasis' are localized in the ear.",
         "action": dnames, "obs": obs_dnames},
        {"plan": f"{plan_head} We have the names of the diseases and their anatomical locations. Next, we need to "
                 "identify which disease is localized in the ear.",
         "thought": "We need to identify which of the diseases 'atopic dermatitis' and 'psoriasis' are localized in the ear.",
         "action": "Feature[DOID:3310, name]", "obs": obs_feature(graph, "DOID:3310", "name")},
    ]
    right = opening + [
        {"plan": plan5, "thought": "We need to identify the diseases associated with the ear.",
         "action": "Feature[DOID:3310, name]", "obs": obs_feature(graph, "DOID:3310", "name")},
        {"plan": f"{plan_head} We have the answer.", "thought": "We have the answer: atopic dermatitis.",
         "action": "Finish[atopic dermatitis]", "obs": None},
    ]
    assert len(wrong) == 10 and len(right) == 6

    reflection = (ROOT / "biomedical" / "reflection_reply.txt").read_text()
    script = script_for_attempt(question, wrong, f"Question: {question}{SUFFIX}\nPlan 1:")
    # Ten steps without Finish: no judge call, straight to reflection.
    script.append({"match": last_line_match(wrong, "Reflection:"), "reply": reflection})
    reflection_tail = reflection.lower().split("(end of reflection)")[0].strip().splitlines()[-1].strip()
    tail_original = [l.strip() for l in reflection.splitlines() if l.strip().lower() == reflection_tail][0]
    script += script_for_attempt(question, right, f"{tail_original}\nWhen last Observation has been given")
    script.append({"match": last_line_match(right, "Proceed with explanation and judgment below:"),
                   "reply": "DOID:3310 is treated by the compound and localizes to the ear, and its name is atopic "
                            "dermatitis, which is the answer given. [yes]"})

    out = ROOT / "biomedical"
    write_json(out / "graph.json", graph)
    write_json(out / "script.json", script)
    (out / "attempt1.txt").write_text(render(wrong))
    (out / "attempt2.txt").write_text(render(right))
    write_json(out / "fixture.json", {
        "graph": "graph.json", "prompts": "../../prompts/biomedical", "retrieval_fields": ["name"],
        "script": "script.json", "question": question, "max_steps": 10, "max_reflections": 2,
        "expected": {"answer": "atopic dermatitis", "correct": True, "attempts": 2, "reflections": 1,
                     "scratchpads": ["attempt1.txt", "attempt2.txt"]}})


# --- small graphs ---------------------------------------------------------------

def sample_graph():
    nodes = {
        "1047566": {"features": {"title": "Hand in Glove", "description": "", "price": "", "category": "books"}},
        "203088": {"features": {"title": "The Glove Maker's Handbook", "description": "Leather working basics.",
                                "price": "12.50", "category": "books"}},
        "203010": {"features": {"title": "Leather Glove Patterns", "description": "", "price": "8.00",
                                "category": "books"}},
        "330112": {"features": {"title": "Garden Gloves, Pair", "description": "Cotton work gloves.",
                                "price": "5.99", "category": "garden"}},
        "330190": {"features": {"title": "Hand Cream", "description": "", "price": "3.49", "category": "beauty"}},
    }
    edges = {
        "203088": {"also-bought-item": ["203010"]},
        "203010": {"also-bought-item": ["203088", "1047566"]},
        "1047566": {"also-bought-item": ["203010"], "also-viewed-item": ["330112", "330190"]},
        "330112": {"also-viewed-item": ["1047566"]},
    }
    write_json(ROOT / "sample_graph.json", {"nodes": nodes, "edges": edges})


def toy():
    nodes = {
        "b7": {"features": {"title": "Pale Fire", "year": "1962"}},
        "b9": {"features": {"title": "Lolita", "year": "1955"}},
        "a3": {"features": {"name": "Vladimir Nabokov"}},
    }
    edges = {"b7": {"written_by": ["a3"]}, "b9": {"written_by": ["a3"]}, "a3": {"wrote": ["b7", "b9"]}}
    graph = {"nodes": nodes, "edges": edges}
    out = ROOT / "toy"
    write_json(out / "graph.json", graph)

    def episode(title, book, answer):
        steps = [
            {"plan": "Locate the book, follow its written_by edge and read the author's name.",
             "thought": "The author is a written_by neighbor of the book node.",
             "action": f"Neighbour[Retrieve[{title}], written_by]",
             "obs": obs_retrieve(book) + " " + obs_neighbours(graph, book, "written_by")},
            {"plan": "Read the author's name.", "thought": "We need the name feature of a3.",
             "action": "Feature[a3, name]", "obs": obs_feature(graph, "a3", "name")},
            {"plan": "The author's name is known.", "thought": f"The answer is {answer}.",
             "action": f"Finish[{answer}]", "obs": None},
        ]
        script = [{"reply": s[r]} for s in steps for r in ("plan", "thought", "action")]
        script.append({"reply": "The observed name answers the question. [yes]"})
        return script

    scripts = {
        "ask": episode("Lolita", "b9", "Vladimir Nabokov"),
        "t1": episode("Lolita", "b9", "Vladimir Nabokov"),
        "t2": episode("Pale Fire", "b7", "Vladimir Nabokov"),
        "t3": episode("Pale Fire", "b7", "Nabokov"),
    }
    write_json(out / "scripts.json", scripts)
    dataset = [
        {"question_id": "t1", "question": "Who wrote the book Lolita?", "answer": "Vladimir Nabokov",
         "domain": "toy", "difficulty": "simple"},
        {"question_id": "t2", "question": "Who wrote the book Pale Fire?", "answer": "Vladimir Nabokov",
         "domain": "toy", "difficulty": "simple"},
        {"question_id": "t3", "question": "Which author wrote Pale Fire?", "answer": "Vladimir Nabokov",
         "domain": "toy", "difficulty": "medium"},
    ]
    (out / "dataset.ndjson").write_text("".join(json.dumps(r) + "\n" for r in dataset))
    write_json(out / "config.json", {
        "domains": {"toy": {"graph": "graph.json", "prompts": "../../prompts/toy"}},
        "backend": {"kind": "scripted", "script": "scripts.json"},
        "episode": {"max_steps": 10, "max_reflections": 2},
        "workers": 1,
        "out": "out"})


if __name__ == "__main__":
    amazon()
    biomedical()
    sample_graph()
    toy()
