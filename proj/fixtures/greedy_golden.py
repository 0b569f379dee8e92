"""Independent oracle for the greedy acceptance rate of a ToyLM pair.

With a budget at least as large as the full top_c-ary tree, greedy drafting
keeps every node, so a cycle accepts the target's argmax chain for as long as
each argmax is among the draft's top_c non-zero tokens, plus one final token.
"""
import sys


def load(path):
    lines = [l.split('#')[0].strip() for l in open(path)]
    lines = [l for l in lines if l]
    hdr = dict(f.split('=') for f in lines[0].split())
    order = int(hdr['order'])
    rows = {}
    for l in lines[1:]:
        ctx, probs = l.split(':')
        rows[tuple(ctx.split())] = [float(p) for p in probs.split()]
    return order, rows


def row(model, hist):
    order, rows = model
    ctx = ['^'] * max(0, order - len(hist)) + [str(t) for t in hist[len(hist) - order:] if order]
    return rows[tuple(ctx[-order:] if order else ())]


def argmax(p):
    return max(range(len(p)), key=lambda i: (p[i], -i))


def top_c(p, c):
    order = sorted(range(len(p)), key=lambda i: (-p[i], i))
    return [t for t in order if p[t] > 0][:c]


def main(target_path, draft_path, cycles, depth, c):
    tgt, drf = load(target_path), load(draft_path)
    hist, total = [], 0
    for _ in range(cycles):
        n = 0
        while True:
            best = argmax(row(tgt, hist))
            in_tree = n < depth and best in top_c(row(drf, hist), c)
            hist.append(best)
            n += 1
            if not in_tree:
                break
        total += n
    print(repr(total / cycles))


if __name__ == '__main__':
    t, d, cycles, depth, c = sys.argv[1:]
    main(t, d, int(cycles), int(depth), int(c))
