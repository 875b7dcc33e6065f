from z3 import *


def write_solution_to_file(solution):
    with open("output.txt", "w") as f:
        if solution is None:
            f.write("None")
        else:
            f.write(" ".join(map(str, solution)))


def solve_with_z3(array, target_sum):
    solver = Solver()
    include_vars = [Bool(f"include_{i}") for i in range(len(array))]
    solver.add(Sum([If(include_vars[i], array[i], 0) for i in range(len(array))]) == target_sum)
    if solver.check() == sat:
        model = solver.model()
        return [array[i] for i in range(len(array)) if is_true(model.evaluate(include_vars[i], model_completion=True))]
    return None


with open("input.txt") as f:
    lines = [line for line in f if line.strip()]
array = list(map(int, lines[0].split()))
target = int(lines[1])
write_solution_to_file(solve_with_z3(array, target))
