from kiro_leno.operator_learning.reporting.renderer import (
    history_table,
    line_plot_svg,
    loss_plot_svg,
    norm_curve_rows,
    read_history_csv,
    summary_line,
    write_history_csv,
    write_rows_csv,
    write_svg,
)

__all__ = [
    "history_table",
    "line_plot_svg",
    "loss_plot_svg",
    "norm_curve_rows",
    "read_history_csv",
    "summary_line",
    "write_history_csv",
    "write_rows_csv",
    "write_svg",
]
